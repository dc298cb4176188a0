"""Forced alignment of transcripts against ASR log-posterior matrices.

The aligner is a max-product trellis over states j = 0..N, where j counts
transcript tokens consumed so far. At frame t the path either stays in
state j or advances to it by emitting token j:

    D[t][j] = max( D[t-1][j] + stay(t, j),
                   D[t-1][j-1] + logp(token_j, t) )

The stay cost is the blank log-posterior, or with the default
``blank_or_repeat`` mode the better of blank and a repeat of the token
just emitted (more robust to stretched phones). D[0][0] = stay(0, 0),
D[0][1] = logp(token_1, 0), and the alignment score is D[T-1][N].

When scores tie, the path stays in its current state as long as possible,
i.e. every token onset is the latest among optimal paths; backtracking
implements this deterministically by preferring the advance predecessor.

Each utterance's confidence score is the minimum over all sliding windows
of L frames inside its span of the mean per-frame log-posterior of the
aligned symbol (L defaults to 10 and is clipped to the span length), so a
single badly matching stretch dominates the score.

Posterior files use the CTCP layout: magic ``CTCP``, then little-endian
u32 frame count T, u32 class count C, u32 frame duration in microseconds,
then T*C float32 log-probabilities in frame-major order. The vocabulary
sidecar ``<name>.vocab.json`` is a JSON array of token strings with
``<blank>`` at index 0.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import FoocttsError

CTCP_MAGIC = b"CTCP"
BLANK_TOKEN = "<blank>"
LOG_PROB_SLACK = 1e-6  # tolerated positive overshoot from float32 noise
DEFAULT_SCORE_WINDOW = 10

STAY_MODES = ("blank_or_repeat", "blank_only")


class BadMagic(FoocttsError):
    pass


class DimensionMismatch(FoocttsError):
    pass


class NotLogProb(FoocttsError):
    pass


class InfeasibleAlignment(FoocttsError):
    pass


class TokenOutOfVocab(FoocttsError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    """Ordered character tokens with a dedicated blank at blank_index."""

    tokens: tuple[str, ...]
    blank_index: int = 0

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        if not (0 <= self.blank_index < len(self.tokens)):
            raise ValueError("blank_index outside vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def lookup(self) -> dict[str, int]:
        return {tok: i for i, tok in enumerate(self.tokens)}

    def encode(self, text: str, skip_unknown_whitespace: bool = True) -> list[int]:
        """Map characters to token ids; unknown whitespace is droppable."""
        table = self.lookup
        ids = []
        for ch in text:
            idx = table.get(ch)
            if idx is None:
                if ch.isspace() and skip_unknown_whitespace:
                    continue
                raise TokenOutOfVocab(f"character {ch!r} not in vocabulary")
            if idx == self.blank_index:
                raise TokenOutOfVocab(f"character {ch!r} maps to the blank token")
            ids.append(idx)
        return ids

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "Vocabulary":
        tokens = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise ValueError(f"{path}: vocabulary must be a JSON array of strings")
        return cls(tokens=tuple(tokens), blank_index=0)

    def to_json(self, path: Union[str, Path]) -> None:
        Path(path).write_text(
            json.dumps(list(self.tokens), ensure_ascii=False), encoding="utf-8"
        )


@dataclass(frozen=True)
class LogPosteriorMatrix:
    """T x C per-frame log-probabilities plus frame timing and vocabulary."""

    log_probs: np.ndarray
    frame_duration_s: float
    vocab: Vocabulary

    def __post_init__(self):
        lp = np.asarray(self.log_probs, dtype=np.float64)
        if lp.ndim != 2:
            raise DimensionMismatch("log_probs must be a T x C matrix")
        t, c = lp.shape
        if t < 1 or c < 2:
            raise DimensionMismatch(f"need T >= 1 and C >= 2, got {t} x {c}")
        if len(self.vocab) != c:
            raise DimensionMismatch(
                f"vocabulary has {len(self.vocab)} tokens but matrix has {c} classes"
            )
        if float(lp.max(initial=-np.inf)) > LOG_PROB_SLACK:
            raise NotLogProb(f"entry {lp.max():.6g} > 0; matrix is not log-probabilities")
        if not self.frame_duration_s > 0:
            raise DimensionMismatch("frame duration must be positive")
        lp = lp.copy()
        lp.setflags(write=False)
        object.__setattr__(self, "log_probs", lp)

    @property
    def n_frames(self) -> int:
        return int(self.log_probs.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.log_probs.shape[1])


@dataclass(frozen=True)
class AlignedUtterance:
    """One utterance's placement on the time axis, with confidence."""

    utterance_index: int
    token_ids: tuple[int, ...]
    start_s: float
    end_s: float
    score: float
    frame_states: np.ndarray  # tokens-consumed state for each frame in the span


def _vocab_sidecar(path: Path) -> Path:
    return path.with_suffix(".vocab.json")


def load_posteriors(path: Union[str, Path]) -> LogPosteriorMatrix:
    """Read a CTCP posterior file and its vocabulary sidecar."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 4 or data[:4] != CTCP_MAGIC:
        raise BadMagic(f"{path}: missing CTCP magic")
    if len(data) < 16:
        raise DimensionMismatch(f"{path}: truncated header")
    t, c, frame_us = struct.unpack_from("<III", data, 4)
    payload = data[16:]
    expected = 4 * t * c
    if len(payload) != expected:
        raise DimensionMismatch(
            f"{path}: payload is {len(payload)} bytes, expected {expected} for {t} x {c}"
        )
    if t < 1 or c < 2 or frame_us == 0:
        raise DimensionMismatch(f"{path}: bad dimensions T={t} C={c} frame_us={frame_us}")
    lp = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(t, c)
    vocab = Vocabulary.from_json(_vocab_sidecar(path))
    return LogPosteriorMatrix(log_probs=lp, frame_duration_s=frame_us / 1e6, vocab=vocab)


def save_posteriors(matrix: LogPosteriorMatrix, path: Union[str, Path]) -> None:
    """Write a CTCP file plus vocabulary sidecar (inverse of load_posteriors)."""
    path = Path(path)
    t, c = matrix.log_probs.shape
    frame_us = int(round(matrix.frame_duration_s * 1e6))
    header = CTCP_MAGIC + struct.pack("<III", t, c, frame_us)
    payload = matrix.log_probs.astype("<f4").tobytes()
    path.write_bytes(header + payload)
    matrix.vocab.to_json(_vocab_sidecar(path))


def _stay_costs(lp: np.ndarray, blank: int, token_ids: Sequence[int], stay_mode: str):
    """stay[t, j] for j = 0..N; advance[t, j] = logp(token_j, t) for j >= 1."""
    t_frames = lp.shape[0]
    n = len(token_ids)
    stay = np.empty((t_frames, n + 1))
    stay[:, 0] = lp[:, blank]
    token_lp = lp[:, list(token_ids)] if n else np.zeros((t_frames, 0))
    if stay_mode == "blank_or_repeat":
        stay[:, 1:] = np.maximum(lp[:, blank][:, None], token_lp)
    else:
        stay[:, 1:] = lp[:, blank][:, None]
    return stay, token_lp


def viterbi_align(
    matrix: LogPosteriorMatrix,
    token_ids: Sequence[int],
    stay_mode: str = "blank_or_repeat",
) -> tuple[float, np.ndarray]:
    """Best monotone stay/advance path through the trellis.

    Returns (score, states) where states[t] is the number of tokens
    consumed up to and including frame t; states is non-decreasing and
    ends at len(token_ids).
    """
    if stay_mode not in STAY_MODES:
        raise ValueError(f"stay_mode must be one of {STAY_MODES}")
    lp = matrix.log_probs
    t_frames = matrix.n_frames
    n = len(token_ids)
    if n < 1:
        raise InfeasibleAlignment("no tokens to align")
    for tok in token_ids:
        if not (0 <= tok < matrix.n_classes):
            raise TokenOutOfVocab(f"token id {tok} outside 0..{matrix.n_classes - 1}")
        if tok == matrix.vocab.blank_index:
            raise TokenOutOfVocab("blank cannot appear in a transcript")
    if n > t_frames:
        raise InfeasibleAlignment(f"{n} tokens cannot fit in {t_frames} frames")

    blank = matrix.vocab.blank_index
    stay, token_lp = _stay_costs(lp, blank, token_ids, stay_mode)

    neg_inf = -np.inf
    score = np.full(n + 1, neg_inf)
    score[0] = stay[0, 0]
    score[1] = token_lp[0, 0]
    # advanced[t, j] records whether the best path reached (t, j) by emitting
    # token j at frame t; ties prefer the advance, which makes every onset
    # the latest among optimal paths (the path "stays" wherever it can).
    advanced = np.zeros((t_frames, n + 1), dtype=bool)
    advanced[0, 1] = True
    for t in range(1, t_frames):
        stay_val = score + stay[t]
        adv_val = np.full(n + 1, neg_inf)
        adv_val[1:] = score[:-1] + token_lp[t]
        advanced[t] = adv_val >= stay_val
        score = np.where(advanced[t], adv_val, stay_val)

    final = float(score[n])
    states = np.empty(t_frames, dtype=np.int64)
    j = n
    for t in range(t_frames - 1, -1, -1):
        states[t] = j
        if j > 0 and advanced[t, j]:
            j -= 1
    if j != 0:
        raise InfeasibleAlignment("no feasible path through the trellis")
    return final, states


def _aligned_frame_costs(
    lp: np.ndarray,
    blank: int,
    token_ids: Sequence[int],
    states: np.ndarray,
    stay_mode: str,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame cost of the aligned symbol and whether that symbol is the token.

    Advance frames align to their token. Stay frames align to blank, or to
    a repeat of the current token when blank_or_repeat and the repeat is
    strictly better.
    """
    t_frames = states.size
    costs = np.empty(t_frames)
    is_token = np.zeros(t_frames, dtype=bool)
    prev = 0
    for t in range(t_frames):
        j = int(states[t])
        if j != prev:  # advance frame: token j emitted here
            costs[t] = lp[t, token_ids[j - 1]]
            is_token[t] = True
        elif j == 0:
            costs[t] = lp[t, blank]
        else:
            blank_lp = lp[t, blank]
            repeat_lp = lp[t, token_ids[j - 1]]
            if stay_mode == "blank_or_repeat" and repeat_lp > blank_lp:
                costs[t] = repeat_lp
                is_token[t] = True
            else:
                costs[t] = blank_lp
        prev = j
    return costs, is_token


def _min_window_mean(values: np.ndarray, window: int) -> float:
    window = max(1, min(window, values.size))
    csum = np.concatenate([[0.0], np.cumsum(values)])
    sums = csum[window:] - csum[:-window]
    return float(sums.min() / window)


def align(
    matrix: LogPosteriorMatrix,
    utterance_token_sequences: Sequence[Sequence[int]],
    stay_mode: str = "blank_or_repeat",
    score_window: int = DEFAULT_SCORE_WINDOW,
) -> list[AlignedUtterance]:
    """Place each utterance on the time axis and score its confidence.

    The utterances' token sequences are concatenated and aligned in one
    pass; utterance k spans from the onset frame of its first token to the
    last frame aligned to its last token. Spans are non-overlapping and in
    transcript order.
    """
    if not utterance_token_sequences:
        raise InfeasibleAlignment("no utterances to align")
    for k, seq in enumerate(utterance_token_sequences):
        if len(seq) == 0:
            raise InfeasibleAlignment(f"utterance {k} has no tokens")
    token_ids = [tok for seq in utterance_token_sequences for tok in seq]
    _, states = viterbi_align(matrix, token_ids, stay_mode=stay_mode)

    lp = matrix.log_probs
    blank = matrix.vocab.blank_index
    costs, is_token = _aligned_frame_costs(lp, blank, token_ids, states, stay_mode)

    onsets = np.empty(len(token_ids), dtype=np.int64)
    prev = 0
    for t in range(states.size):
        j = int(states[t])
        if j != prev:
            onsets[j - 1] = t
        prev = j

    results = []
    boundary = 0
    frame_dur = matrix.frame_duration_s
    for k, seq in enumerate(utterance_token_sequences):
        first = boundary
        boundary += len(seq)
        start_frame = int(onsets[first])
        next_onset = int(onsets[boundary]) if boundary < len(token_ids) else states.size
        in_last = np.flatnonzero(
            (states[:next_onset] == boundary) & is_token[:next_onset]
        )
        end_frame = int(in_last[-1]) if in_last.size else int(onsets[boundary - 1])
        span_costs = costs[start_frame : end_frame + 1]
        results.append(
            AlignedUtterance(
                utterance_index=k,
                token_ids=tuple(seq),
                start_s=start_frame * frame_dur,
                end_s=(end_frame + 1) * frame_dur,
                score=_min_window_mean(span_costs, score_window),
                frame_states=states[start_frame : end_frame + 1].copy(),
            )
        )
    return results


def emit_segments(aligned: Sequence[AlignedUtterance], recording_id: str) -> str:
    """Kaldi-style segments lines: `<utt_id> <recording_id> <start> <end>`."""
    if not aligned:
        raise ValueError("nothing to emit: no aligned utterances")
    lines = []
    for utt in aligned:
        utt_id = f"{recording_id}_{utt.utterance_index:04d}"
        lines.append(f"{utt_id} {recording_id} {utt.start_s:.3f} {utt.end_s:.3f}\n")
    return "".join(lines)
