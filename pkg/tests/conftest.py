from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from gcsc_eval import load_pinyin_table

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def pinyin_table_path() -> Path:
    return DATA_DIR / "pinyin_small.tsv"


@pytest.fixture(scope="session")
def pinyin_table(pinyin_table_path):
    return load_pinyin_table(pinyin_table_path)


class MockJudgeServer:
    """Local chat-completion endpoint for exercising the LLM judge offline.

    `reply` maps a parsed request body to the content string to return;
    `fail_codes` holds HTTP statuses to emit (one per request) before
    answering normally. `hits` counts every arriving request, `bodies`
    only the successfully answered ones.
    """

    def __init__(self):
        self.bodies: list[dict] = []
        self.hits = 0
        self.fail_codes: list[int] = []
        self.reply = lambda body: "1"
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                outer.hits += 1
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length).decode("utf-8"))
                if outer.fail_codes:
                    code = outer.fail_codes.pop(0)
                    self.send_response(code)
                    self.end_headers()
                    return
                outer.bodies.append(body)
                content = outer.reply(body)
                payload = json.dumps(
                    {"choices": [{"message": {"content": content}}]}
                ).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def judge_server():
    server = MockJudgeServer()
    yield server
    server.close()
