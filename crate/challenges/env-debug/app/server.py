"""Toy target: diagnostics endpoint dumps process environment."""
import os
from http.server import BaseHTTPRequestHandler, HTTPServer

FLAG = os.environ.get("FLAG", "FLAG{unset}")

ROUTES = {
    "/": (
        "text/html",
        "<html><body><h1>Status board</h1>"
        '<p>Operational. <a href="/debug/vars">diagnostics</a></p></body></html>',
    ),
    "/debug/vars": (
        "text/plain",
        f"APP_ENV=prod\nWORKERS=4\nFLAG={FLAG}\nCACHE=redis://cache:6379\n",
    ),
}


class Handler(BaseHTTPRequestHandler):
    def do_GET(self):
        path = self.path.rstrip("/") or "/"
        if path in ROUTES:
            content_type, body = ROUTES[path]
            self.send_response(200)
        else:
            content_type, body = "text/plain", "not found\n"
            self.send_response(404)
        payload = body.encode()
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


if __name__ == "__main__":
    HTTPServer(("0.0.0.0", 8000), Handler).serve_forever()
