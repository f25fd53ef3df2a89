"""Frame clocks and the duration term of the speed interval.

Times come either from a constant frame rate (t_i = i / fps) or verbatim
from a per-frame timestamp sidecar; variable-rate streams must use the
sidecar, never an averaged frame duration.  Each endpoint timestamp carries
the same uncertainty delta_t, so a path of duration T contributes

    eps_t = 2 * delta_t / T

to the relative speed error.  The default delta_t is 5 ms; an analyst with
an external time reference can override it per project.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence, Union

from .errors import MissingTimestamp, ZeroDuration
from .model import ConstantFps, FrameRef, TimingSpec, parse_sidecar


@dataclass(frozen=True)
class FrameClock:
    times_s: Mapping[int, float]
    delta_t_s: float
    source: str  # "cfr" | "pts"

    def time(self, frame: int) -> float:
        try:
            return self.times_s[frame]
        except KeyError:
            raise MissingTimestamp(frame) from None


def build_clock(
    spec: TimingSpec,
    frames: Sequence[Union[FrameRef, int]],
    sidecar_text: str | None = None,
) -> FrameClock:
    """Clock over the referenced frame indices.

    cfr mode computes t_i = i / fps.  pts mode reads every index verbatim
    from the sidecar (line order = frame index); pass ``sidecar_text`` when
    the file has already been read, otherwise the path in the spec is
    opened.  No smoothing or averaging in either mode.
    """
    indices = [f.index if isinstance(f, FrameRef) else int(f) for f in frames]
    if isinstance(spec.mode, ConstantFps):
        times = {i: i / spec.mode.fps for i in indices}
        return FrameClock(times_s=times, delta_t_s=spec.delta_t_s, source="cfr")

    if sidecar_text is None:
        sidecar_text = Path(spec.mode.sidecar).read_text()
    table = parse_sidecar(sidecar_text)
    times = {}
    for i in indices:
        if not 0 <= i < len(table):
            raise MissingTimestamp(i)
        times[i] = table[i]
    return FrameClock(times_s=times, delta_t_s=spec.delta_t_s, source="pts")


def duration(clock: FrameClock, i0: int, iN: int) -> tuple[float, float]:
    """(T, eps_t) between two frame indices; T must be positive."""
    t0 = clock.time(i0)
    tN = clock.time(iN)
    T = tN - t0
    if T <= 0:
        raise ZeroDuration(f"t[{iN}] - t[{i0}] = {T} s")
    eps_t = 2.0 * clock.delta_t_s / T
    return T, eps_t
