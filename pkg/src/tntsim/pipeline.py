"""Communication stages: perceive, imagine, describe, interpret, identify.

The sender turns a private raster view into a short token message; the
receiver turns the message back into a representation and picks one of six
candidate views. Every stage can be bound to one of three backends:

* ``builtin`` — the neural perceiver plus shared-embedding vector algebra,
* ``mock`` — hash-seeded pseudorandom outputs for tests and baselines,
* ``remote`` — an HTTP image service (imagine/describe only, see `wire`).

Representations live in a D-dimensional space spanned by the shared
embedding table. A view enters that space either through the perceiver's
class probabilities (``space="probs"``, the default: the probability-weighted
mixture of token embeddings) or through a fixed random projection of the
penultimate features (``space="features"``).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import nn, seeds
from .nn import LabelDistribution, NetSpec, ParameterSet
from .raster import RasterView

EMBEDDING_DIM = 32
NORM_TOL = 1e-9
DEGENERATE_TOL = 1e-12
STAGES = ("perceive", "imagine", "describe", "interpret", "identify")
REMOTABLE_STAGES = ("imagine", "describe")


class PipelineError(ValueError):
    """A stage received inputs it cannot turn into a valid output."""


class BackendUnavailableError(RuntimeError):
    """Remote backend failed; carries the HTTP status when one was seen."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class Vocabulary:
    """Ordered set of K distinct whitespace-free token strings."""

    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 2:
            raise PipelineError("vocabulary needs at least 2 tokens")
        if len(set(self.labels)) != len(self.labels):
            raise PipelineError("vocabulary tokens must be distinct")
        for tok in self.labels:
            if not tok or any(ch.isspace() for ch in tok):
                raise PipelineError(f"bad vocabulary token: {tok!r}")

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, token: str) -> bool:
        return token in self.labels

    def index(self, token: str) -> int:
        return self.labels.index(token)


@dataclass(frozen=True)
class EmbeddingTable:
    """K x D matrix of unit-norm rows, one per vocabulary token.

    Both agents hold the same table; it is the fixed shared code that
    makes token messages interpretable across the channel.
    """

    vocab: Vocabulary
    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.float64))
        if m.ndim != 2 or m.shape[0] != len(self.vocab):
            raise PipelineError("embedding matrix must be K x D")
        norms = np.linalg.norm(m, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise PipelineError("embedding rows must have unit norm")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def seeded(cls, vocab: Vocabulary, dim: int = EMBEDDING_DIM,
               seed: int = 0) -> "EmbeddingTable":
        rng = seeds.generator(seeds.derive(seed, "embedding-table"))
        m = rng.standard_normal((len(vocab), dim))
        m /= np.linalg.norm(m, axis=1, keepdims=True)
        return cls(vocab, m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def row(self, token: str) -> np.ndarray:
        return self.matrix[self.vocab.index(token)]


@dataclass(frozen=True)
class Representation:
    """Unit-norm vector in the shared D-dimensional space."""

    vec: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vec, dtype=np.float64))
        if v.ndim != 1:
            raise PipelineError("representation must be a 1-d vector")
        if abs(float(np.linalg.norm(v)) - 1.0) > NORM_TOL:
            raise PipelineError("representation must have unit norm")
        v.flags.writeable = False
        object.__setattr__(self, "vec", v)


@dataclass(frozen=True)
class Message:
    """Ordered tuple of tokens; the only thing that crosses the channel."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise PipelineError("message must contain at least one token")


@dataclass(frozen=True)
class FeatureProjection:
    """Fixed seeded H -> D matrix; never trained."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.float64))
        if m.ndim != 2:
            raise PipelineError("projection matrix must be D x H")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def seeded(cls, in_dim: int, out_dim: int = EMBEDDING_DIM,
               seed: int = 0) -> "FeatureProjection":
        rng = seeds.generator(seeds.derive(seed, "feature-projection"))
        return cls(rng.standard_normal((out_dim, in_dim)) / np.sqrt(in_dim))


@dataclass(frozen=True)
class BackendBinding:
    """Per-stage backend selector plus the remote endpoint when needed.

    `overrides` maps a stage name to a callable replacing that stage
    outright; it exists for instrumented tests (oracle receivers, channel
    probes) and is ignored by equality.
    """

    perceive: str = "builtin"
    imagine: str = "builtin"
    describe: str = "builtin"
    interpret: str = "builtin"
    identify: str = "builtin"
    endpoint: str | None = None
    overrides: Mapping[str, Callable] = field(
        default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for stage in STAGES:
            sel = getattr(self, stage)
            if sel not in ("builtin", "mock", "remote"):
                raise PipelineError(f"unknown backend {sel!r} for {stage}")
            if sel == "remote" and stage not in REMOTABLE_STAGES:
                raise PipelineError(f"stage {stage} cannot be remote")
        if "remote" in (self.perceive, self.imagine, self.describe,
                        self.interpret, self.identify) and not self.endpoint:
            raise PipelineError("remote backend requires an endpoint")

    def selector(self, stage: str) -> str:
        return getattr(self, stage)


@dataclass(frozen=True)
class StageContext:
    """Immutable bundle of everything the stages share within one agent pair:
    net layout, embedding table, feature projection, blend and message knobs.
    """

    netspec: NetSpec
    emb: EmbeddingTable
    projection: FeatureProjection | None = None
    alpha: float = 0.5
    describe_k: int = 3
    message_len: int = 3
    space: str = "probs"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise PipelineError("alpha must lie in [0, 1]")
        if not 1 <= self.describe_k <= len(self.emb.vocab):
            raise PipelineError("describe k must lie in 1..K")
        if self.message_len < 1:
            raise PipelineError("message length must be >= 1")
        if self.space not in ("probs", "features"):
            raise PipelineError(f"unknown similarity space {self.space!r}")
        if self.space == "features" and self.projection is None:
            raise PipelineError("features space requires a projection")


def default_context(netspec: NetSpec, emb: EmbeddingTable, seed: int = 0,
                    **kwargs) -> StageContext:
    """StageContext with a seeded projection sized to the net's features."""
    proj = FeatureProjection.seeded(nn.feature_dim(netspec), emb.dim, seed)
    return StageContext(netspec=netspec, emb=emb, projection=proj, **kwargs)


# ---------------------------------------------------------------- builtin

def perceive(params: ParameterSet, view: RasterView,
             netspec: NetSpec) -> LabelDistribution:
    """Run the perceiver on one view and return its label distribution."""
    _, dist, _ = nn.forward(params, view, netspec)
    return dist


def _perceive_full(params: ParameterSet, view: RasterView, netspec: NetSpec):
    # one forward pass serving both the distribution and the feature vector
    _, dist, features = nn.forward(params, view, netspec)
    return dist, features


def view_vector(dist: LabelDistribution, features: np.ndarray,
                ctx: StageContext) -> np.ndarray:
    """Map one perceived view into the shared space; unit norm.

    probs space: probability-weighted mixture of token embeddings, which is
    comparable across differently trained perceivers because the table is
    shared. features space: fixed random projection of the penultimate
    activations, comparable only between identical perceivers.
    """
    if ctx.space == "probs":
        v = ctx.emb.matrix.T @ dist.probs
    else:
        v = ctx.projection.matrix @ features
    norm = float(np.linalg.norm(v))
    if norm < DEGENERATE_TOL:
        raise PipelineError("degenerate view vector")
    return v / norm


def imagine(top_label: str, view: RasterView, params: ParameterSet,
            emb: EmbeddingTable, alpha: float, ctx: StageContext,
            *, _dist: LabelDistribution | None = None,
            _features: np.ndarray | None = None) -> Representation:
    """Blend the top label's embedding with the view's vector.

    r = normalize(alpha * E[top] + (1 - alpha) * V(view)). The endpoints are
    exact: alpha=1 returns the embedding row itself, alpha=0 the view vector.
    """
    if top_label not in emb.vocab:
        raise PipelineError(f"unknown label {top_label!r}")
    if alpha == 1.0:
        return Representation(emb.row(top_label))
    if _dist is None or _features is None:
        _dist, _features = _perceive_full(params, view, ctx.netspec)
    vv = view_vector(_dist, _features, ctx)
    if alpha == 0.0:
        return Representation(vv)
    blend = alpha * emb.row(top_label) + (1.0 - alpha) * vv
    norm = float(np.linalg.norm(blend))
    if norm < DEGENERATE_TOL:
        raise PipelineError("degenerate imagination")
    return Representation(blend / norm)


def describe(r: Representation, emb: EmbeddingTable, k: int) -> Message:
    """The k vocabulary tokens most cosine-similar to r, best first.

    Embedding rows are unit vectors, so the dot product ranks cosines; a
    stable sort on the negated scores breaks ties toward lower indices.
    """
    if not 1 <= k <= len(emb.vocab):
        raise PipelineError("k must lie in 1..K")
    sims = emb.matrix @ r.vec
    order = np.argsort(-sims, kind="stable")
    return Message(tuple(emb.vocab.labels[i] for i in order[:k]))


def interpret(msg: Message, emb: EmbeddingTable) -> Representation:
    """Mean embedding of the known tokens, normalized; unknowns skipped."""
    rows = [emb.row(t) for t in msg.tokens if t in emb.vocab]
    if not rows:
        raise PipelineError("uninterpretable message")
    mean = np.mean(rows, axis=0)
    norm = float(np.linalg.norm(mean))
    if norm < DEGENERATE_TOL:
        raise PipelineError("uninterpretable message")
    if len(rows) == 1:
        return Representation(rows[0])
    return Representation(mean / norm)


def candidate_vectors(params: ParameterSet, candidates: tuple[RasterView, ...],
                      ctx: StageContext) -> list[np.ndarray | None]:
    """Shared-space vector per candidate view; None marks a degenerate one."""
    out = []
    for cand in candidates:
        dist, features = _perceive_full(params, cand, ctx.netspec)
        try:
            out.append(view_vector(dist, features, ctx))
        except PipelineError:
            out.append(None)
    return out


def identify(r: Representation, candidates: tuple[RasterView, ...],
             params: ParameterSet, ctx: StageContext,
             *, _vectors: list | None = None) -> tuple[int, tuple[float, ...]]:
    """Choose the candidate whose view vector is most similar to r.

    Returns (index, scores). Degenerate candidates score -inf and are never
    selected unless every candidate is degenerate, which is an error. Ties
    go to the lowest index.
    """
    if _vectors is None:
        _vectors = candidate_vectors(params, candidates, ctx)
    scores = np.full(len(_vectors), -np.inf)
    for i, vec in enumerate(_vectors):
        if vec is not None:
            scores[i] = float(np.dot(r.vec, vec))
    if not np.any(np.isfinite(scores)):
        raise PipelineError("all candidates degenerate")
    return int(np.argmax(scores)), tuple(float(s) for s in scores)


# ------------------------------------------------------------------- mock

def _canonical_bytes(obj) -> bytes:
    """Stable byte encoding of stage inputs for hash seeding."""
    if obj is None:
        return b"n;"
    if isinstance(obj, bool):
        return b"b%d;" % int(obj)
    if isinstance(obj, int):
        return b"i%d;" % obj
    if isinstance(obj, float):
        return b"f" + repr(obj).encode() + b";"
    if isinstance(obj, str):
        return b"s" + obj.encode("utf-8") + b";"
    if isinstance(obj, RasterView):
        return b"r" + obj.content_hash().encode() + b";"
    if isinstance(obj, Representation):
        return _canonical_bytes(obj.vec)
    if isinstance(obj, Message):
        return b"m" + "\x1f".join(obj.tokens).encode("utf-8") + b";"
    if isinstance(obj, LabelDistribution):
        return _canonical_bytes(obj.probs)
    if isinstance(obj, np.ndarray):
        a = np.ascontiguousarray(obj)
        head = ("a" + str(a.dtype) + str(a.shape)).encode()
        return head + a.tobytes() + b";"
    if isinstance(obj, (tuple, list)):
        return b"l" + b"".join(_canonical_bytes(x) for x in obj) + b";"
    if isinstance(obj, dict):
        parts = [_canonical_bytes(k) + _canonical_bytes(obj[k])
                 for k in sorted(obj)]
        return b"d" + b"".join(parts) + b";"
    raise TypeError(f"cannot canonicalize {type(obj).__name__}")


def _mock_rng(stage_name: str, inputs: dict, seed: int) -> np.random.Generator:
    h = hashlib.blake2b(digest_size=8, person=b"mockstage")
    h.update(_canonical_bytes(stage_name))
    h.update(_canonical_bytes(inputs))
    h.update(_canonical_bytes(seed))
    return seeds.generator(int.from_bytes(h.digest(), "little") & (2**63 - 1))


def mock_stage(stage_name: str, inputs: dict, seed: int):
    """Deterministic pseudorandom stand-in for any stage.

    The output is drawn from a generator seeded by a hash of the stage
    name, a canonical encoding of the inputs, and the seed, so identical
    calls agree bit-for-bit while different seeds decorrelate.
    """
    rng = _mock_rng(stage_name, inputs, seed)
    if stage_name == "perceive":
        probs = rng.dirichlet(np.ones(int(inputs["num_classes"])))
        return LabelDistribution(probs)
    if stage_name in ("imagine", "interpret"):
        v = rng.standard_normal(int(inputs["dim"]))
        return Representation(v / np.linalg.norm(v))
    if stage_name == "describe":
        labels = tuple(inputs["labels"])
        k = int(inputs["k"])
        picks = rng.choice(len(labels), size=k, replace=False)
        return Message(tuple(labels[int(i)] for i in picks))
    if stage_name == "identify":
        n = int(inputs["num_candidates"])
        scores = rng.uniform(-1.0, 1.0, size=n)
        return int(np.argmax(scores)), tuple(float(s) for s in scores)
    raise PipelineError(f"unknown stage {stage_name!r}")


# ----------------------------------------------------------------- remote

def _http_transport(method: str, url: str, body: bytes | None):
    """POST/GET JSON over HTTP; returns (status, body bytes)."""
    import urllib.error
    import urllib.request

    req = urllib.request.Request(
        url, data=body, method=method,
        headers={"Content-Type": "application/json"} if body else {})
    try:
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, resp.read()
    except urllib.error.HTTPError as err:
        return err.code, err.read()
    except OSError as err:
        raise BackendUnavailableError(f"backend unavailable: {err}") from err


def remote_stage(stage_name: str, inputs: dict, endpoint: str,
                 transport: Callable = _http_transport):
    """Run imagine or describe against the HTTP image service.

    imagine: sends (prompt, init view PNG, strength, seed) and maps the
    returned image back into the shared space with the local perceiver.
    describe: sends an image for captioning and tokenizes the returned text
    into at most `message_len` tokens, keeping unknown tokens as-is.

    Any transport failure, non-2xx status, or malformed body raises
    BackendUnavailableError; callers record it rather than crash.
    """
    from . import wire

    if stage_name == "imagine":
        body = wire.encode_imagine_request(
            prompt=inputs["prompt"], image=inputs["view"].pixels,
            strength=float(inputs["strength"]), seed=int(inputs["seed"]))
        raw = _roundtrip(transport, "POST", endpoint + wire.IMAGINE_PATH, body)
        try:
            image = wire.decode_imagine_response(raw)
        except wire.WireProtocolError as err:
            raise BackendUnavailableError(
                f"backend unavailable: {err}") from err
        view = RasterView(image.shape[1], image.shape[0], image)
        ctx: StageContext = inputs["ctx"]
        dist, features = _perceive_full(inputs["params"], view, ctx.netspec)
        return imagine(inputs["prompt"], view, inputs["params"], ctx.emb,
                       0.0, ctx, _dist=dist, _features=features), view
    if stage_name == "describe":
        img = inputs["image"]
        pixels = img.pixels if isinstance(img, RasterView) else img
        body = wire.encode_caption_request(image=pixels)
        raw = _roundtrip(transport, "POST", endpoint + wire.CAPTION_PATH, body)
        try:
            text = wire.decode_caption_response(raw)
        except wire.WireProtocolError as err:
            raise BackendUnavailableError(
                f"backend unavailable: {err}") from err
        tokens = wire.tokenize_caption(text)
        if not tokens:
            raise BackendUnavailableError("backend unavailable: empty caption")
        return Message(tuple(tokens[:int(inputs["message_len"])]))
    raise PipelineError(f"stage {stage_name} cannot be remote")


def _roundtrip(transport, method: str, url: str, body: bytes) -> bytes:
    from . import wire

    status, raw = transport(method, url, body)
    if not 200 <= status < 300:
        detail = wire.decode_error(raw)
        raise BackendUnavailableError(
            f"backend unavailable: status {status}: {detail}", status=status)
    return raw
