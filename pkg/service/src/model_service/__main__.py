"""Run the service: python -m model_service --config service.json"""
import argparse

import uvicorn

from .app import create_app
from .config import ServiceConfig


def main() -> None:
    parser = argparse.ArgumentParser(prog="model_service")
    parser.add_argument("--config", required=True, help="JSON service configuration")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8601)
    args = parser.parse_args()
    uvicorn.run(create_app(ServiceConfig.from_json(args.config)), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
