"""Generation backends: rule-based mock, remote HTTP service, record/replay cassette"""
import asyncio
import json
import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import aiohttp
from core.config import settings
from core.data_loader import DataLoader
from core.errors import ContentError, InputError, TransportError
from core.llm_gateway import GenerationBackend
from core.prompts import PHASE_RE, input_section, split_context
from core.segmenter import segment
from core.tokens import count_tokens
from models.generation import GenParams
from models.review import LanguageCode, Review
from models.taxonomy import Taxonomy

logger = logging.getLogger(__name__)

MARKER_RE = re.compile(r"\[\[[A-Za-z0-9_]+\]\]")
STAT_LINE_RE = re.compile(r"^(\d+)% of the reviews mention (.+?): (.*)$")
WORD_COUNT_RE = re.compile(r"within (\d+) words")
ASPECT_RE = re.compile(r"capturing (.+?) aspect mentioned in input")
_TOKEN_RE = re.compile(r"^(\W*)(.*?)(\W*)$", re.DOTALL)


def _field(instruction: str, name: str) -> Optional[str]:
    match = re.search(rf"^{re.escape(name)}: (.*)$", instruction, re.MULTILINE)
    return match.group(1).strip() if match else None


def _keyword_regex(keyword: str) -> re.Pattern:
    body = r"\s+".join(re.escape(part) for part in keyword.casefold().split())
    return re.compile(rf"(?<!\w){body}(?!\w)")


class MockBackend(GenerationBackend):
    """
    Deterministic rule-based stand-in for a language model.

    The phase is read from the "### Phase:" line of extraction prompts or
    recognised from the summarisation templates. Each phase answers from the
    taxonomy keywords, the opinion lexicon and the bilingual dictionary.
    Optional synthetic latency makes it usable for benchmarking.
    """

    def __init__(
        self,
        taxonomy: Optional[Taxonomy] = None,
        latency_per_call: float = 0.0,
        latency_per_token: float = 0.0,
        max_context_tokens: Optional[int] = None,
        single_flight: bool = False,
    ):
        self.taxonomy = taxonomy
        self.latency_per_call = latency_per_call
        self.latency_per_token = latency_per_token
        self.max_context_tokens = max_context_tokens or settings.BACKEND_MAX_CONTEXT
        self.single_flight = single_flight
        self.calls = 0
        self.prompts_served = 0
        self._loader = DataLoader()
        self._keyword_patterns: Optional[List[Tuple[re.Pattern, str]]] = None

    async def generate(self, prompts: List[str], params: GenParams) -> List[str]:
        self.calls += 1
        self.prompts_served += len(prompts)
        delay = self.latency_per_call
        if self.latency_per_token and prompts:
            delay += self.latency_per_token * max(count_tokens(p) for p in prompts)
        if delay > 0:
            await asyncio.sleep(delay)
        return [self.respond(prompt) for prompt in prompts]

    def respond(self, prompt: str) -> str:
        """Answer one prompt; raises ContentError when the phase is unknown"""
        instruction, context = split_context(prompt)
        match = PHASE_RE.search(instruction)
        if match:
            phase = match.group(1)
            handler = {
                "aspect_id": self._aspects,
                "sentiment": self._sentiment,
                "verbatim": self._verbatims,
                "translate": self._translate,
            }.get(phase)
            if handler is None:
                raise ContentError(f"unrecognised phase marker {phase!r}")
            return handler(instruction, context or "")
        try:
            return self._summarise(prompt)
        except Exception as e:
            raise ContentError(f"unrecognised prompt: {e}") from e

    # ===== Extraction phases =====

    def _patterns(self) -> List[Tuple[re.Pattern, str]]:
        if self.taxonomy is None:
            raise ContentError("mock backend needs a taxonomy for extraction prompts")
        if self._keyword_patterns is None:
            self._keyword_patterns = [
                (_keyword_regex(kw), l3) for kw, l3 in self.taxonomy.keyword_index()
            ]
        return self._keyword_patterns

    def _aspects(self, instruction: str, context: str) -> str:
        text = context.casefold()
        order = {name: i for i, name in enumerate(self.taxonomy.l3_names())} if self.taxonomy else {}
        first_seen: Dict[str, int] = {}
        for pattern, l3 in self._patterns():
            found = pattern.search(text)
            if found and found.start() < first_seen.get(l3, len(text) + 1):
                first_seen[l3] = found.start()
        if not first_seen:
            return "none"
        ranked = sorted(first_seen, key=lambda l3: (first_seen[l3], order.get(l3, 0)))
        return ", ".join(ranked)

    def _language(self, instruction: str, name: str = "Review language") -> LanguageCode:
        value = _field(instruction, name)
        if value is None:
            raise ContentError(f"prompt has no {name!r} line")
        return LanguageCode.parse(value)

    def _aspect_segments(self, instruction: str, context: str) -> List[str]:
        aspect = _field(instruction, "Aspect") or ""
        language = self._language(instruction)
        keywords = self.taxonomy.keywords.get(aspect) if self.taxonomy else None
        patterns = [_keyword_regex(kw) for kw in (keywords or aspect.split())]
        review = Review(review_id="mock", entity_id="mock", language=language, text=context)
        return [
            seg.text for seg in segment(review)
            if any(p.search(seg.text.casefold()) for p in patterns)
        ]

    def _sentiment(self, instruction: str, context: str) -> str:
        language = self._language(instruction)
        positive, negative = self._loader.get_lexicon().get(language, (frozenset(), frozenset()))
        words = set()
        for text in self._aspect_segments(instruction, context) or [context]:
            words.update(re.findall(r"\w+", text.casefold()))
        has_pos = bool(words & positive)
        has_neg = bool(words & negative)
        if has_pos and has_neg:
            return "both"
        return "negative" if has_neg else "positive"

    def _verbatims(self, instruction: str, context: str) -> str:
        return "\n".join(self._aspect_segments(instruction, context))

    def translate_word(self, word: str, source: LanguageCode, target: LanguageCode) -> str:
        prefix, core, suffix = _TOKEN_RE.match(word).groups()
        if not core or source == target:
            return word
        to_english, from_english = self._loader.get_dictionary()
        folded = core.casefold()
        english = folded if source == LanguageCode.EN else to_english.get((source, folded))
        if english is None:
            return word
        translated = english if target == LanguageCode.EN else from_english.get((target, english))
        if translated is None:
            return word
        if core[0].isupper():
            translated = translated[:1].upper() + translated[1:]
        return prefix + translated + suffix

    def translate_line(self, line: str, source: LanguageCode, target: LanguageCode) -> str:
        return " ".join(self.translate_word(w, source, target) for w in line.split())

    def _translate(self, instruction: str, context: str) -> str:
        source = self._language(instruction, "Source language")
        target = self._language(instruction, "Target language")
        _, _, phrases = instruction.partition("Phrases:\n")
        lines = [line for line in phrases.split("\n") if line.strip()]
        return "\n".join(self.translate_line(line, source, target) for line in lines)

    # ===== Summarisation =====

    @staticmethod
    def _head(text: str, limit: int) -> Tuple[List[str], List[str]]:
        words, markers = [], []
        for token in text.split():
            if MARKER_RE.fullmatch(token):
                if token not in markers:
                    markers.append(token)
            elif token != "|" and len(words) < limit:
                words.append(token)
        return words, markers

    def _summarise(self, prompt: str) -> str:
        source = input_section(prompt)
        found = WORD_COUNT_RE.search(prompt)
        word_count = int(found.group(1)) if found else 10
        lines = [line.strip() for line in source.split("\n") if line.strip()]

        stats = [STAT_LINE_RE.match(line) for line in lines]
        if lines and all(stats):
            per_line = max(1, word_count // len(stats))
            parts = []
            for stat in stats:
                words, markers = self._head(stat.group(3), per_line)
                parts.append(" ".join(
                    [f"{stat.group(1)}% of the reviews mention {stat.group(2)}:"] + words + markers
                ))
            return " ".join(parts)

        aspect_match = ASPECT_RE.search(prompt)
        aspect = aspect_match.group(1) if aspect_match else None
        if aspect:
            prefix = f"{aspect}:"
            lines = [line[len(prefix):].strip() if line.startswith(prefix) else line for line in lines]
        words, markers = self._head(" ".join(lines), word_count)
        body = " ".join(words + markers)
        return f"{aspect}: {body}" if aspect else body


class RemoteBackend(GenerationBackend):
    """
    Text generation service over HTTP.

    Request body ``{"prompts": [...], "max_output_tokens": n,
    "temperature": t, "stop": [...]}``, response body
    ``{"outputs": [...]}`` in request order.
    """

    def __init__(
        self,
        url: Optional[str] = None,
        api_key: Optional[str] = None,
        auth_header: Optional[str] = None,
        timeout: Optional[float] = None,
        max_context_tokens: Optional[int] = None,
        single_flight: bool = False,
    ):
        self.url = url or settings.BACKEND_URL
        self.api_key = api_key if api_key is not None else settings.API_KEY
        self.auth_header = auth_header or settings.BACKEND_AUTH_HEADER
        self.timeout = timeout or settings.BACKEND_TIMEOUT
        self.max_context_tokens = max_context_tokens or settings.BACKEND_MAX_CONTEXT
        self.single_flight = single_flight
        self._session: Optional[aiohttp.ClientSession] = None

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers[self.auth_header] = self.api_key
        return headers

    async def _get_session(self) -> aiohttp.ClientSession:
        if self._session is None or self._session.closed:
            self._session = aiohttp.ClientSession(timeout=aiohttp.ClientTimeout(total=self.timeout))
        return self._session

    async def generate(self, prompts: List[str], params: GenParams) -> List[str]:
        body = {
            "prompts": prompts,
            "max_output_tokens": params.max_output_tokens,
            "temperature": params.temperature,
            "stop": list(params.stop_sequences),
        }
        session = await self._get_session()
        try:
            async with session.post(self.url, json=body, headers=self._headers()) as response:
                if response.status >= 500 or response.status == 429:
                    raise TransportError(f"backend returned HTTP {response.status}")
                if response.status != 200:
                    raise ContentError(f"backend rejected the request with HTTP {response.status}")
                payload = await response.json()
        except asyncio.TimeoutError as e:
            raise TransportError(f"backend timed out after {self.timeout}s") from e
        except aiohttp.ClientError as e:
            raise TransportError(f"backend unreachable: {e}") from e

        outputs = payload.get("outputs") if isinstance(payload, dict) else None
        if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
            raise ContentError("backend response has no 'outputs' list of strings")
        return outputs

    async def aclose(self):
        if self._session is not None and not self._session.closed:
            await self._session.close()


class CassetteBackend(GenerationBackend):
    """
    Records prompt -> response pairs of a real backend to a JSONL file, or
    replays them offline. Replaying a prompt that was never recorded is a
    ContentError.
    """

    def __init__(self, path: Path, inner: Optional[GenerationBackend] = None, mode: str = "replay"):
        if mode not in ("record", "replay"):
            raise InputError(f"cassette mode must be record or replay, not {mode!r}")
        if mode == "record" and inner is None:
            raise InputError("recording needs a backend to record from")
        self.path = Path(path)
        self.inner = inner
        self.mode = mode
        self.max_context_tokens = inner.max_context_tokens if inner else settings.BACKEND_MAX_CONTEXT
        self.single_flight = inner.single_flight if inner else False
        self._tape: Dict[Tuple[str, str], str] = {}
        if mode == "replay":
            self._load()
        elif self.path.exists():
            self.path.unlink()

    @staticmethod
    def _params_key(params: GenParams) -> str:
        return json.dumps(params.model_dump(mode="json"), sort_keys=True)

    def _load(self):
        if not self.path.exists():
            raise InputError(f"cassette not found: {self.path}")
        with open(self.path, "r", encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    record = json.loads(line)
                    key = (record["prompt"], json.dumps(record["params"], sort_keys=True))
                    self._tape[key] = record["response"]
        logger.info("✓ Loaded %d recorded responses from %s", len(self._tape), self.path)

    async def generate(self, prompts: List[str], params: GenParams) -> List[str]:
        params_key = self._params_key(params)
        if self.mode == "replay":
            outputs = []
            for prompt in prompts:
                try:
                    outputs.append(self._tape[(prompt, params_key)])
                except KeyError:
                    raise ContentError("prompt not found in cassette") from None
            return outputs

        outputs = await self.inner.generate(prompts, params)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            for prompt, output in zip(prompts, outputs):
                if (prompt, params_key) in self._tape:
                    continue
                self._tape[(prompt, params_key)] = output
                record = {"prompt": prompt, "params": params.model_dump(mode="json"), "response": output}
                f.write(json.dumps(record, ensure_ascii=False) + "\n")
        return outputs

    async def aclose(self):
        if self.inner is not None:
            await self.inner.aclose()
