import threading
import time

import pytest

from conftest import make_segment
from pelab.errors import PeError, ProviderError, RateLimitError, StartupError, TransportError
from pelab.llm_client import (
    CompletionRequest,
    LlmClient,
    MockProvider,
    OpenAIProvider,
    RetryPolicy,
    canonical_request,
    echo_response,
    request_digest,
)
from pelab.prompting import DecodingParams, Mode, PromptMessages, build_postedit_prompt


def request(model="model-x", system="sys", user="usr", mode=Mode.COT, **params):
    return CompletionRequest(
        model=model,
        messages=PromptMessages(system, user, mode),
        params=DecodingParams(**params),
    )


def client_with(provider, tmp_path, retries=3):
    return LlmClient(
        provider,
        cache_dir=tmp_path / "cache",
        retry=RetryPolicy(retries=retries, backoff_base=0.001),
        sleep=lambda _: None,
    )


class TestDigest:
    def test_stable_for_identical_requests(self):
        assert request_digest("p", request()) == request_digest("p", request())

    @pytest.mark.parametrize(
        "variant",
        [
            lambda: request(model="model-y"),
            lambda: request(system="other"),
            lambda: request(user="other"),
            lambda: request(mode=Mode.DIRECT),
            lambda: request(temperature=0.5),
            lambda: request(top_p=0.9),
            lambda: request(max_tokens=2),
        ],
    )
    def test_any_field_change_changes_key(self, variant):
        assert request_digest("p", request()) != request_digest("p", variant())

    def test_provider_is_part_of_key(self):
        assert request_digest("p1", request()) != request_digest("p2", request())

    def test_canonical_form_has_no_whitespace_noise(self):
        canonical = canonical_request("p", request())
        assert ": " not in canonical and ", " not in canonical


class TestCompleteAndCache:
    def test_second_call_hits_cache(self, tmp_path):
        provider = MockProvider(default=lambda req: "answer")
        client = client_with(provider, tmp_path)
        first = client.complete(request())
        second = client.complete(request())
        assert first.cached is False
        assert second.cached is True
        assert second.text == first.text == "answer"
        assert len(provider.calls) == 1

    def test_cache_file_layout(self, tmp_path):
        provider = MockProvider(default=lambda req: "answer")
        client = client_with(provider, tmp_path)
        client.complete(request())
        digest = request_digest("mock", request())
        assert (tmp_path / "cache" / digest[:2] / f"{digest}.json").is_file()

    def test_canned_map_keyed_by_digest(self, tmp_path):
        req = request()
        digest = request_digest("mock", req)
        provider = MockProvider(canned={digest: "canned text"})
        client = client_with(provider, tmp_path)
        assert client.complete(req).text == "canned text"

    def test_provider_error_not_retried(self, tmp_path):
        calls = []

        class Rejecting:
            name = "rej"

            def complete_text(self, req):
                calls.append(1)
                raise ProviderError("HTTP 401")

        client = client_with(Rejecting(), tmp_path)
        with pytest.raises(ProviderError):
            client.complete(request())
        assert len(calls) == 1

    def test_rate_limit_retried_then_succeeds(self, tmp_path):
        sleeps = []

        class Flaky:
            name = "flaky"

            def __init__(self):
                self.failures = 2

            def complete_text(self, req):
                if self.failures:
                    self.failures -= 1
                    raise RateLimitError("429")
                return "ok"

        client = LlmClient(
            Flaky(),
            cache_dir=tmp_path / "cache",
            retry=RetryPolicy(retries=3, backoff_base=1.0),
            sleep=sleeps.append,
        )
        assert client.complete(request()).text == "ok"
        assert len(sleeps) == 2

    def test_transport_failure_exhausts_retries(self, tmp_path):
        calls = []

        class Down:
            name = "down"

            def complete_text(self, req):
                calls.append(1)
                raise TransportError("connection refused")

        client = client_with(Down(), tmp_path, retries=3)
        with pytest.raises(TransportError, match="3 retries"):
            client.complete(request())
        assert len(calls) == 4  # initial attempt + 3 retries


class TestBatchComplete:
    def test_order_preserved(self, tmp_path):
        provider = MockProvider(default=lambda req: req.messages.user_text.upper())
        client = client_with(provider, tmp_path)
        requests = [request(user=f"text {i}") for i in range(5)]
        responses = client.batch_complete(requests, max_inflight=3)
        assert [r.text for r in responses] == [f"TEXT {i}" for i in range(5)]

    def test_sequential_when_max_inflight_is_one(self, tmp_path):
        provider = MockProvider(default=lambda req: "ok")
        client = client_with(provider, tmp_path)
        requests = [request(user=f"text {i}") for i in range(10)]
        client.batch_complete(requests, max_inflight=1)
        expected = [request_digest("mock", req) for req in requests]
        assert provider.calls == expected
        assert provider.max_inflight_seen == 1

    def test_inflight_never_exceeds_limit(self, tmp_path):
        def slow(req):
            time.sleep(0.01)
            return "ok"

        provider = MockProvider(default=slow)
        client = client_with(provider, tmp_path)
        requests = [request(user=f"text {i}") for i in range(12)]
        client.batch_complete(requests, max_inflight=3)
        assert provider.max_inflight_seen <= 3

    def test_one_failure_embedded_among_successes(self, tmp_path):
        bad = request(user="explode")

        def respond(req):
            if req.messages.user_text == "explode":
                raise ProviderError("boom")
            return "fine"

        provider = MockProvider(default=respond)
        client = client_with(provider, tmp_path)
        results = client.batch_complete([request(user="a"), bad, request(user="b")], 2)
        assert results[0].text == "fine"
        assert isinstance(results[1], PeError)
        assert results[2].text == "fine"

    def test_empty_batch(self, tmp_path):
        client = client_with(MockProvider(default=lambda r: "x"), tmp_path)
        assert client.batch_complete([], 4) == []

    def test_bad_max_inflight(self, tmp_path):
        client = client_with(MockProvider(default=lambda r: "x"), tmp_path)
        with pytest.raises(ValueError):
            client.batch_complete([request()], 0)


class TestMockEcho:
    def test_cot_echo_parses(self):
        from pelab.prompting import parse_postedit_output

        segment = make_segment()
        req = CompletionRequest("m", build_postedit_prompt(segment, Mode.COT))
        edits, improved = parse_postedit_output(echo_response(req), Mode.COT)
        assert edits and improved

    def test_echo_is_deterministic_per_request(self):
        req_a = request(user="a")
        req_b = request(user="b")
        assert echo_response(req_a) == echo_response(req_a)
        assert echo_response(req_a) != echo_response(req_b)

    def test_call_log_written(self, tmp_path):
        log_path = tmp_path / "calls.log"
        provider = MockProvider(default=lambda r: "x", log_path=log_path)
        client = client_with(provider, tmp_path)
        client.complete(request())
        client.complete(request())  # cache hit: no extra call
        assert log_path.read_text().count("\n") == 1


class TestOpenAIProvider:
    def test_missing_credential_is_startup_error(self, monkeypatch):
        monkeypatch.delenv("PE_API_KEY", raising=False)
        with pytest.raises(StartupError):
            OpenAIProvider()

    def test_env_base_url_override(self, monkeypatch):
        monkeypatch.setenv("PE_BASE_URL", "http://localhost:9999/v1/")
        provider = OpenAIProvider(api_key="k")
        assert provider.base_url == "http://localhost:9999/v1"


class TestCacheConcurrency:
    def test_concurrent_writers_tolerated(self, tmp_path):
        provider = MockProvider(default=lambda req: req.messages.user_text)
        client = client_with(provider, tmp_path)
        requests = [request(user=f"u{i % 4}") for i in range(32)]
        errors = []

        def worker(req):
            try:
                client.complete(req)
            except Exception as exc:  # pragma: no cover - failure reporting
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(req,)) for req in requests]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        assert not errors
        for i in range(4):
            assert client.complete(request(user=f"u{i}")).text == f"u{i}"
