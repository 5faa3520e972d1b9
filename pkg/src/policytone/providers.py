"""Transports for external model providers.

Both the embedding and sentiment providers speak the same wire format:
a JSON array of strings goes in, a JSON array of equal-length number
arrays comes back.  Two transports are supported, a subprocess reading
stdin/writing stdout and an HTTP endpoint accepting a POST body.
"""

import json
import shlex
import subprocess
import urllib.error
import urllib.request


class ProviderError(Exception):
    """Provider call failed.

    retriable distinguishes transient transport failures from contract
    violations (malformed payloads), which retrying will not fix.
    """

    def __init__(self, message, batch_index=None, retriable=False):
        super().__init__(message)
        self.batch_index = batch_index
        self.retriable = retriable


def _decode_response(raw, n_texts):
    try:
        payload = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ProviderError(f"provider returned invalid JSON: {exc}") from exc
    if not isinstance(payload, list) or len(payload) != n_texts:
        raise ProviderError(
            f"provider returned {len(payload) if isinstance(payload, list) else 'non-list'}"
            f" rows for {n_texts} inputs")
    rows = []
    for i, row in enumerate(payload):
        if not isinstance(row, list) or not all(
                isinstance(v, (int, float)) for v in row):
            raise ProviderError(f"row {i} is not a numeric array")
        rows.append([float(v) for v in row])
    return rows


def call_command(command, texts, timeout=300):
    """Run `command`, feed texts as JSON on stdin, parse JSON rows from stdout."""
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    try:
        proc = subprocess.run(
            argv, input=json.dumps(list(texts)).encode("utf-8"),
            capture_output=True, timeout=timeout)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise ProviderError(f"provider command failed to run: {exc}",
                            retriable=True) from exc
    if proc.returncode != 0:
        raise ProviderError(
            f"provider command exited {proc.returncode}: "
            f"{proc.stderr.decode('utf-8', 'replace')[:500]}",
            retriable=True)
    return _decode_response(proc.stdout.decode("utf-8"), len(texts))


def call_http(url, texts, timeout=300):
    """POST texts as a JSON array to `url`, parse JSON rows from the body."""
    req = urllib.request.Request(
        url, data=json.dumps(list(texts)).encode("utf-8"),
        headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            raw = resp.read().decode("utf-8")
    except (urllib.error.URLError, OSError, TimeoutError) as exc:
        raise ProviderError(f"provider endpoint unreachable: {exc}",
                            retriable=True) from exc
    return _decode_response(raw, len(texts))
