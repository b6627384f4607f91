"""Run the sidecar: `python -m genbridge` or the `genbridge` script.

All configuration comes from GENBRIDGE_* environment variables; see
config.ServiceConfig for the full list and defaults.
"""

import sys

import uvicorn

from .config import ConfigError, ServiceConfig
from .service import create_app


def main() -> int:
    try:
        cfg = ServiceConfig.from_env()
        app = create_app(cfg, preload=False)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    print(f"genbridge: image={cfg.image_model} caption={cfg.caption_model} "
          f"device={cfg.device} on http://{cfg.host}:{cfg.port}")
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
