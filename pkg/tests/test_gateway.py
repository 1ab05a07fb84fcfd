import json
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from vidaas.errors import AuthError, FixtureMiss, PayloadTooLarge, ProviderError, RateLimited, Timeout
from vidaas.gateway import (ChatRequest, FixtureTransport, HttpxTransport, Message,
                            MockGateway, OpenAICompatGateway, ProviderConfig, TextPart,
                            TransportRequest, TransportResponse, TransportTimeout,
                            chat_request, fixtures_from_env)
from vidaas.media import AudioTrack, EncodedImage
from vidaas.util import sha256_hex

JPEG_STUB = bytes.fromhex("ffd8ffdb") + b"\x00" * 16  # not decodable, only transported


def _image(n=1):
    return EncodedImage(data=JPEG_STUB + bytes([n]), width=4, height=4)


def _audio(payload=b"RIFFxxxxWAVEdata"):
    return AudioTrack(data=payload, sample_rate=16000, channels=1, duration=1.0)


# ---------------------------------------------------------------- mock

class TestMockGateway:
    def test_deterministic_across_runs(self, mock_gw):
        req = chat_request("mock-vision", "sys", "evaluate this", images=[_image()])
        a = mock_gw.vision_complete(req)
        b = MockGateway().vision_complete(req)
        assert a == b

    def test_distinct_requests_distinct_responses(self, mock_gw):
        r1 = mock_gw.text_complete(chat_request("mock-text", "sys", "prompt one"))
        r2 = mock_gw.text_complete(chat_request("mock-text", "sys", "prompt two"))
        assert r1.text != r2.text

    def test_zero_user_messages_rejected(self, mock_gw):
        req = ChatRequest(model="mock-text", messages=(Message("system", (TextPart("s"),)),))
        with pytest.raises(ValueError):
            mock_gw.text_complete(req)

    def test_images_rejected_on_text_route(self, mock_gw):
        req = chat_request("mock-text", "sys", "hello", images=[_image()])
        with pytest.raises(ValueError):
            mock_gw.text_complete(req)

    def test_image_count_cap(self):
        gw = MockGateway(max_images_per_request=2)
        req = chat_request("mock-vision", "sys", "x", images=[_image(i) for i in range(3)])
        with pytest.raises(ValueError):
            gw.vision_complete(req)

    def test_transcript_contract(self, mock_gw):
        audio = _audio(b"payload-bytes")
        t = mock_gw.transcribe(audio)
        assert t.text == f"MOCK TRANSCRIPT {sha256_hex(audio.data)[:8]}"
        assert mock_gw.transcribe(audio).text == t.text
        assert mock_gw.transcribe(_audio(b"other")).text != t.text

    def test_oversized_audio_rejected(self):
        gw = MockGateway(max_audio_bytes=8)
        with pytest.raises(PayloadTooLarge):
            gw.transcribe(_audio(b"123456789"))

    def test_scores_block_when_contract_present(self, mock_gw):
        prompt = ("VIDEO RUBRIC:\n1. a\n2. b\n3. c\n\nreply ending with\n\n"
                  "SCORES\n1: <score>/5 - <rationale>\nOVERALL: <x>/5")
        out = mock_gw.text_complete(chat_request("mock-text", "sys", prompt)).text
        block = [l for l in out.splitlines() if re.match(r"^\d+: \d/5 - ", l)]
        assert len(block) == 3

    def test_latency_pinned_to_zero(self, mock_gw):
        mt = mock_gw.text_complete(chat_request("mock-text", "sys", "x"))
        assert mt.latency_ms == 0 and mt.provider_id == "mock"


# ---------------------------------------------------------------- retries

class ScriptedTransport:
    """Yields scripted responses/exceptions and counts concurrency."""

    def __init__(self, script):
        self.script = list(script)
        self.calls = []
        self.active = 0
        self.max_active = 0
        self._lock = threading.Lock()

    def __call__(self, req: TransportRequest) -> TransportResponse:
        with self._lock:
            self.active += 1
            self.max_active = max(self.max_active, self.active)
            self.calls.append(req)
            item = self.script.pop(0) if self.script else self.script_default
        try:
            if isinstance(item, Exception):
                raise item
            return item
        finally:
            with self._lock:
                self.active -= 1

    script_default = TransportResponse(200, {"choices": [{"message": {"content": "ok"}}],
                                             "usage": {}})


def _ok(text="ok"):
    return TransportResponse(200, {"choices": [{"message": {"content": text}}],
                                   "usage": {"prompt_tokens": 1, "completion_tokens": 2}})


def _gateway(transport, **cfg_overrides):
    cfg = ProviderConfig(base_url="http://test.invalid/v1", **cfg_overrides)
    sleeps = []
    gw = OpenAICompatGateway(cfg, transport=transport, sleeper=sleeps.append)
    return gw, sleeps


class TestRetryEngine:
    def test_retries_429_then_succeeds(self):
        transport = ScriptedTransport([TransportResponse(429, None), _ok("recovered")])
        gw, sleeps = _gateway(transport, max_retries=3)
        mt = gw.text_complete(chat_request("m", "s", "u"))
        assert mt.text == "recovered"
        assert len(sleeps) == 1

    def test_backoff_schedule_doubles_with_jitter(self):
        transport = ScriptedTransport([TransportResponse(500, None)] * 3 + [_ok()])
        gw, sleeps = _gateway(transport, max_retries=3)
        gw.text_complete(chat_request("m", "s", "u"))
        assert len(sleeps) == 3
        for k, delay in enumerate(sleeps):
            nominal = 0.5 * (2 ** k)
            assert nominal * 0.75 <= delay <= nominal * 1.25

    def test_rate_limit_exhaustion(self):
        transport = ScriptedTransport([TransportResponse(429, None)] * 4)
        gw, _ = _gateway(transport, max_retries=2)
        with pytest.raises(RateLimited):
            gw.text_complete(chat_request("m", "s", "u"))
        assert len(transport.calls) == 3  # initial + 2 retries

    def test_auth_error_never_retried(self):
        transport = ScriptedTransport([TransportResponse(401, None), _ok()])
        gw, sleeps = _gateway(transport, max_retries=5)
        with pytest.raises(AuthError):
            gw.text_complete(chat_request("m", "s", "u"))
        assert len(transport.calls) == 1 and sleeps == []

    def test_semantic_4xx_not_retried(self):
        transport = ScriptedTransport([TransportResponse(422, None, "bad request")])
        gw, _ = _gateway(transport, max_retries=5)
        with pytest.raises(ProviderError):
            gw.text_complete(chat_request("m", "s", "u"))
        assert len(transport.calls) == 1

    def test_timeouts_retried_then_raised(self):
        transport = ScriptedTransport([TransportTimeout("t")] * 3)
        gw, _ = _gateway(transport, max_retries=2)
        with pytest.raises(Timeout):
            gw.text_complete(chat_request("m", "s", "u"))
        assert len(transport.calls) == 3


class TestInFlightBound:
    def test_never_exceeds_max_in_flight(self):
        barrier_delay = 0.02

        class SlowTransport(ScriptedTransport):
            def __call__(self, req):
                with self._lock:
                    self.active += 1
                    self.max_active = max(self.max_active, self.active)
                time.sleep(barrier_delay)
                try:
                    return _ok()
                finally:
                    with self._lock:
                        self.active -= 1

        transport = SlowTransport([])
        gw, _ = _gateway(transport, max_in_flight=3)
        threads = [threading.Thread(
            target=lambda i=i: gw.text_complete(chat_request("m", "s", f"u{i}")))
            for i in range(12)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert transport.max_active <= 3


# ---------------------------------------------------------------- fixtures

class _StubHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        if self.path.endswith("/chat/completions"):
            tag = sha256_hex(body)[:8]
            payload = {"choices": [{"message": {"role": "assistant",
                                                "content": f"STUB REPLY {tag}"}}],
                       "usage": {"prompt_tokens": 11, "completion_tokens": 4}}
        elif self.path.endswith("/audio/transcriptions"):
            payload = {"text": "stub transcript", "language": "en", "duration": 1.5}
        else:
            self.send_response(404)
            self.end_headers()
            return
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}/v1"
    server.shutdown()
    server.server_close()


class TestFixtures:
    def test_record_then_replay_identical(self, stub_server, tmp_path, monkeypatch):
        monkeypatch.setenv("VIDAAS_API_KEY", "sk-canary-fixture-test-0001")
        fixture_dir = tmp_path / "fixtures"
        cfg = ProviderConfig(base_url=stub_server)
        recording = OpenAICompatGateway(
            cfg, transport=FixtureTransport(fixture_dir, "record", HttpxTransport()))
        req = chat_request(cfg.text_model, "sys", "fixture round trip")
        audio = _audio()
        live_text = recording.text_complete(req)
        live_tr = recording.transcribe(audio)
        assert live_text.text.startswith("STUB REPLY ")

        # replay with no inner transport: the server is no longer consulted
        replaying = OpenAICompatGateway(
            cfg, transport=FixtureTransport(fixture_dir, "replay"))
        replay_text = replaying.text_complete(req)
        replay_tr = replaying.transcribe(audio)
        assert replay_text.text == live_text.text
        assert (replay_text.prompt_tokens, replay_text.completion_tokens) == \
            (live_text.prompt_tokens, live_text.completion_tokens)
        assert replay_tr == live_tr

    def test_replay_miss_raises(self, tmp_path):
        cfg = ProviderConfig(base_url="http://down.invalid/v1")
        gw = OpenAICompatGateway(cfg, transport=FixtureTransport(tmp_path, "replay"))
        with pytest.raises(FixtureMiss):
            gw.text_complete(chat_request(cfg.text_model, "sys", "never recorded"))

    def test_fixture_files_contain_no_key_material(self, stub_server, tmp_path, monkeypatch):
        canary = "sk-canary-fixture-test-0002"
        monkeypatch.setenv("VIDAAS_API_KEY", canary)
        fixture_dir = tmp_path / "fixtures"
        cfg = ProviderConfig(base_url=stub_server)
        gw = OpenAICompatGateway(
            cfg, transport=FixtureTransport(fixture_dir, "record", HttpxTransport()))
        gw.text_complete(chat_request(cfg.text_model, "sys", "secrecy check"))
        blobs = [p.read_text() for p in fixture_dir.glob("*.json")]
        assert blobs
        assert all(canary not in blob for blob in blobs)

    def test_fixtures_from_env_parsing(self, tmp_path, monkeypatch):
        inner = ScriptedTransport([])
        monkeypatch.delenv("VIDAAS_FIXTURES", raising=False)
        assert fixtures_from_env(inner) is inner
        monkeypatch.setenv("VIDAAS_FIXTURES", f"replay:{tmp_path}")
        wrapped = fixtures_from_env(inner)
        assert isinstance(wrapped, FixtureTransport)
        monkeypatch.setenv("VIDAAS_FIXTURES", "sideways")
        with pytest.raises(ValueError):
            fixtures_from_env(inner)
