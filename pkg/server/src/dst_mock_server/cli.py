"""Launch the mock server: dst-mock-server --ontology ont.json --port 8123"""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="dst-mock-server")
    parser.add_argument("--ontology", required=True, help="ontology JSON file")
    parser.add_argument("--port", type=int, default=8123)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument(
        "--mode",
        choices=["mock"],
        default="mock",
        help="only the deterministic mock is shipped; plug real models via create_app(predictor=...)",
    )
    args = parser.parse_args(argv)
    app = create_app(ontology_path=args.ontology)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
