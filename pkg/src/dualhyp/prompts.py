"""Prompt assembly for single-stream GER, DualHyp and RelPrompt.

All three variants share one template; DualHyp drops the mask lines and
the sentence pointing at them, GER additionally drops the VSR block.
Output uses LF line endings and ends with ``### Response:`` (no newline).
"""

from __future__ import annotations

from enum import Enum

from .errors import EmptyList, MissingMasks, ValidationError
from .nbest import DualHypotheses, NBestList
from .relmask import ReliabilityMask, mask_to_string

SEPARATOR = " || "

_INTRO = "Below are the best-hypothesis transcribed from {source}."
_TASK = (
    " Revise it using the words which are only included into other-hypotheses,"
    " and write the response for the true transcription."
)
_MASK_HINT = " Refer to the audio and video masks for reliability."


class PromptVariant(str, Enum):
    GER = "ger"
    DUALHYP = "dualhyp"
    RELPROMPT = "relprompt"


def _block(label: str, nbest: NBestList, mask_label: str | None, mask: ReliabilityMask | None) -> list[str]:
    texts = [h.text for h in nbest]
    lines = [
        f"### {label} Best-hypothesis: {texts[0]}",
        f"### {label} Other-hypotheses: {SEPARATOR.join(texts[1:])}",
    ]
    if mask_label is not None:
        lines.append(f"### {mask_label} Mask: {mask_to_string(mask)}")
    return lines


def build_prompt(
    variant: PromptVariant | str,
    dual: DualHypotheses | NBestList,
    masks: tuple[ReliabilityMask | None, ReliabilityMask | None] | None = None,
) -> str:
    variant = PromptVariant(variant)
    if isinstance(dual, NBestList):
        if variant is not PromptVariant.GER:
            raise ValidationError(f"{variant.value} prompt needs both ASR and VSR lists")
        asr, vsr = dual, None
    else:
        asr, vsr = dual.asr, dual.vsr
    if not len(asr) or (vsr is not None and not len(vsr)):
        raise EmptyList()

    if variant is PromptVariant.GER:
        header = _INTRO.format(source="ASR") + _TASK
        parts = [header, "", *_block("ASR", asr, None, None)]
    elif variant is PromptVariant.DUALHYP:
        header = _INTRO.format(source="ASR and VSR") + _TASK
        parts = [header, "", *_block("ASR", asr, None, None), "", *_block("VSR", vsr, None, None)]
    else:
        if masks is None or masks[0] is None or masks[1] is None:
            raise MissingMasks("relprompt needs both audio and video masks")
        header = _INTRO.format(source="ASR and VSR") + _TASK + _MASK_HINT
        parts = [
            header,
            "",
            *_block("ASR", asr, "Audio", masks[0]),
            "",
            *_block("VSR", vsr, "Video", masks[1]),
        ]
    parts += ["", "### Response:"]
    return "\n".join(parts)


def build_record_prompt(variant: PromptVariant | str, record) -> str:
    """Prompt for a :class:`~dualhyp.dataset.DualRecord`."""
    variant = PromptVariant(variant)
    if variant is PromptVariant.GER:
        return build_prompt(variant, record.asr)
    masks = (record.audio_mask, record.video_mask) if variant is PromptVariant.RELPROMPT else None
    return build_prompt(variant, record.dual, masks)
