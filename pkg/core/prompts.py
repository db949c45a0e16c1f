"""Prompt rendering and the markers shared by templates and the mock backend"""
import re
from typing import Any, Mapping, Optional
from core.errors import TemplateError
from models.generation import PromptTemplate

# Separates the rendered instruction from the review it is about
CONTEXT_MARKER = "\n\n### Context:\n"

PHASE_RE = re.compile(r"^### Phase: (\w+)$", re.MULTILINE)
INPUT_RE = re.compile(r"(?:### )?Input: (.*?)\n\n(?:### )?Response:", re.DOTALL)
MINIMAL_PREFIX = "Write the summary with "


def render(template: PromptTemplate, variables: Mapping[str, Any], context: Optional[str] = None) -> str:
    """
    Fill every placeholder of a template. Missing and unexpected variables
    are both errors. When a context is given it is appended last.
    """
    provided = set(variables)
    missing = template.placeholders - provided
    if missing:
        raise TemplateError(
            f"template {template.name.value!r} is missing placeholder(s): {', '.join(sorted(missing))}"
        )
    excess = provided - template.placeholders
    if excess:
        raise TemplateError(
            f"template {template.name.value!r} got unexpected variable(s): {', '.join(sorted(excess))}"
        )
    text = template.text.format(**variables) if template.placeholders else template.text
    if context is not None:
        text = text + CONTEXT_MARKER + context
    return text


def split_context(prompt: str) -> tuple:
    """(instruction, context); context is None when the prompt has none"""
    if CONTEXT_MARKER not in prompt:
        return prompt, None
    instruction, _, context = prompt.rpartition(CONTEXT_MARKER)
    return instruction, context


def input_section(prompt: str) -> str:
    """The text a summarisation prompt asks to summarise"""
    match = INPUT_RE.search(prompt)
    if match:
        return match.group(1)
    if prompt.startswith(MINIMAL_PREFIX):
        return prompt[len(MINIMAL_PREFIX):]
    raise TemplateError("prompt has no input section")
