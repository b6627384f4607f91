"""Play a trial with imagine and describe served over the wire protocol.

No network involved: the transport is the in-process reference stub, the
same one the recorded contract fixtures come from. It echoes images back
and captions every one of them with the same text, so all 48 episodes
carry one constant message and the receiver cannot beat chance; meaning
has to come from the backend model, not from the plumbing. The point is
watching the two remotable stages leave the process boundary while
perceive, interpret, and identify stay local.

    python3 demos/remote_stub_trial.py
"""

from quickstart_trial import SMALL, pretrain_role
from tntsim.episode import CHANCE_LEVEL, run_trial
from tntsim.figures import default_figures
from tntsim.pipeline import BackendBinding
from tntsim.wire import reference_stub_transport


def main() -> None:
    cfg = SMALL
    sender = pretrain_role(cfg, "sender")
    receiver = pretrain_role(cfg, "receiver")

    bindings = BackendBinding(imagine="remote", describe="remote",
                              endpoint="http://stub.invalid")
    # caption in vocabulary words so the receiver can interpret the message
    stub = reference_stub_transport(caption_text="ladder moon cross")
    result = run_trial(sender, receiver, default_figures(), bindings,
                       seed=0, ctx=cfg.make_context(), transport=stub,
                       raster_hw=(cfg.raster_width, cfg.raster_height))

    messages = {tuple(e.message.tokens) for e in result.episodes if e.message}
    print(f"\ndistinct messages seen: {sorted(messages)}")
    print(f"trial accuracy {result.accuracy:.4f} "
          f"(chance {CHANCE_LEVEL:.4f}, {result.error_count} errors)")


if __name__ == "__main__":
    main()
