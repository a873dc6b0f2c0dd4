"""Channel generation, gain planning, and effective-channel construction.

Raw per-slot channels for a K-user single-antenna interference channel are
held as a dense complex tensor indexed ``[receiver, transmitter, slot]``.
Artificial transmit/receive gain sequences turn those raw slots into the
diagonal effective channels consumed by the precoder and verification
layers. Three coding modes are supported:

``plain``
    No artificial gains; the effective diagonals are the raw slots.
``naive``
    One gain pair per slot, ``beta[k, t] * h[k, j, t] * alpha[j, t]``.
``double``
    Paired slots collapse two gain-scaled taps into one effective entry,
    halving the dimension:
    ``beta[k, q] h[k, j, q] alpha[j, q] + beta[k, D+q] h[k, j, D+q] alpha[j, D+q]``.

User labels are 1-based everywhere in the public API; array axes are the
corresponding 0-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRealizationError, ParameterError

CONSTANT = "constant"
SLOW_CHANGING = "slow_changing"
IID = "iid"
CHANNEL_MODELS = (CONSTANT, SLOW_CHANGING, IID)

PLAIN = "plain"
NAIVE = "naive"
DOUBLE = "double"
CODING_MODES = (PLAIN, NAIVE, DOUBLE)

GAIN_DISTRIBUTION = "complex_normal_unit"

# Raw draws below this magnitude are redrawn so downstream entrywise
# inverses stay bounded.
MIN_DRAW_MAGNITUDE = 1e-6

# A paired-sum effective entry whose magnitude falls below this fraction of
# its matrix mean counts as a cancellation and the realization is rejected.
DEGENERATE_REL_TOL = 1e-9


def subseed(seed: int, *key: int) -> int:
    """Derive a child seed from ``seed`` and an integer key path.

    Distinct key paths give statistically independent substreams, which keeps
    channel draws, gain draws, and per-trial noise decoupled even when they
    share one experiment seed.
    """
    seq = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return int(seq.generate_state(1, np.uint64)[0])


def _sample_unit_complex(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Circularly symmetric unit-variance complex normals, small draws redrawn."""
    out = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    while True:
        small = np.abs(out) < MIN_DRAW_MAGNITUDE
        if not small.any():
            return out
        redraw = (rng.standard_normal(int(small.sum())) + 1j * rng.standard_normal(int(small.sum()))) / np.sqrt(2.0)
        out[small] = redraw


@dataclass(frozen=True)
class ChannelSet:
    """Raw channel tensor for one realization of a K-user network.

    Attributes
    ----------
    users : int
        Number of transmit/receive pairs K, at least 3.
    slots : int
        Symbol-extension length T, at least 2.
    entries : numpy.ndarray
        Complex tensor of shape ``(users, users, slots)``;
        ``entries[k-1, j-1, t]`` is the tap from transmitter j to receiver k
        in slot t. Treated as immutable once constructed.
    model_tag : str
        One of ``constant``, ``slow_changing``, ``iid``.
    """

    users: int
    slots: int
    entries: np.ndarray
    model_tag: str

    def __post_init__(self) -> None:
        if self.users < 3:
            raise ParameterError(f"need at least 3 users, got {self.users}")
        if self.slots < 2:
            raise ParameterError(f"need at least 2 slots, got {self.slots}")
        if self.model_tag not in CHANNEL_MODELS:
            raise ParameterError(f"unknown channel model {self.model_tag!r}")
        shape = (self.users, self.users, self.slots)
        if self.entries.shape != shape:
            raise ParameterError(f"entries shape {self.entries.shape} != {shape}")
        if not np.all(np.isfinite(self.entries)):
            raise ParameterError("channel entries must be finite")
        if np.any(self.entries == 0):
            raise ParameterError("channel entries must be nonzero")
        if self.model_tag == CONSTANT:
            if np.any(self.entries != self.entries[:, :, :1]):
                raise ParameterError("constant model requires identical slots")
        elif self.model_tag == SLOW_CHANGING:
            if self.slots % 2:
                raise ParameterError("slow_changing model requires an even slot count")
            half = self.slots // 2
            first, second = self.entries[:, :, :half], self.entries[:, :, half:]
            if np.any(first != first[:, :, :1]) or np.any(second != second[:, :, :1]):
                raise ParameterError("slow_changing model requires two constant halves")

    def half_blocks(self) -> tuple[np.ndarray, np.ndarray]:
        """Return the per-link taps of the two T/2 halves (requires even T)."""
        if self.slots % 2:
            raise ParameterError("slot count is odd, no half split exists")
        half = self.slots // 2
        return self.entries[:, :, :half], self.entries[:, :, half:]


@dataclass(frozen=True)
class GainPlan:
    """Artificial transmit (alpha) and receive (beta) gain sequences.

    Both arrays have shape ``(users, slots)``; ``alpha[j-1, t]`` scales
    transmitter j in slot t and ``beta[k-1, t]`` scales receiver k.
    """

    users: int
    slots: int
    alpha: np.ndarray
    beta: np.ndarray
    distribution_tag: str = GAIN_DISTRIBUTION

    def __post_init__(self) -> None:
        if self.users < 1:
            raise ParameterError(f"need at least 1 user, got {self.users}")
        if self.slots < 1:
            raise ParameterError(f"need at least 1 slot, got {self.slots}")
        shape = (self.users, self.slots)
        for name, arr in (("alpha", self.alpha), ("beta", self.beta)):
            if arr.shape != shape:
                raise ParameterError(f"{name} shape {arr.shape} != {shape}")
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} must be finite")
            if np.any(arr == 0):
                raise ParameterError(f"{name} must be nonzero")


@dataclass(frozen=True)
class EffectiveChannel:
    """Diagonal effective channels produced by one coding mode.

    ``diagonals[k-1, j-1]`` holds the length-``dim`` diagonal of the
    effective channel from transmitter j to receiver k. For ``double``
    coding ``dim`` is half the raw slot count; otherwise it equals it.
    """

    users: int
    dim: int
    diagonals: np.ndarray
    coding_tag: str
    channels: ChannelSet
    gains: GainPlan | None

    def __post_init__(self) -> None:
        if self.coding_tag not in CODING_MODES:
            raise ParameterError(f"unknown coding mode {self.coding_tag!r}")
        expected_dim = self.channels.slots // 2 if self.coding_tag == DOUBLE else self.channels.slots
        if self.coding_tag == DOUBLE and self.channels.slots % 2:
            raise ParameterError("double coding requires an even slot count")
        if self.dim != expected_dim:
            raise ParameterError(f"dim {self.dim} != {expected_dim} implied by {self.coding_tag}")
        shape = (self.users, self.users, self.dim)
        if self.diagonals.shape != shape:
            raise ParameterError(f"diagonals shape {self.diagonals.shape} != {shape}")
        if self.users != self.channels.users:
            raise ParameterError("user count disagrees with channel set")
        if self.coding_tag == PLAIN:
            if self.gains is not None:
                raise ParameterError("plain coding takes no gain plan")
        elif self.gains is None:
            raise ParameterError(f"{self.coding_tag} coding requires a gain plan")
        if not np.all(np.isfinite(self.diagonals)):
            raise ParameterError("effective diagonals must be finite")
        if np.any(self.diagonals == 0):
            raise ParameterError("effective diagonals must be nonzero")

    def diagonal(self, receiver: int, transmitter: int) -> np.ndarray:
        """Effective diagonal from 1-based ``transmitter`` to ``receiver``."""
        for label in (receiver, transmitter):
            if not 1 <= label <= self.users:
                raise ParameterError(f"user label {label} outside 1..{self.users}")
        return self.diagonals[receiver - 1, transmitter - 1]


def generate_channels(users: int, slots: int, model: str, seed: int) -> ChannelSet:
    """Draw one seeded channel realization.

    Parameters
    ----------
    users : int
        Number of user pairs K >= 3.
    slots : int
        Extension length T >= 2 (even for ``slow_changing``).
    model : str
        ``constant`` repeats one draw across all slots, ``slow_changing``
        holds two draws over the two halves of the extension, ``iid``
        draws every slot independently.
    seed : int
        Seed for the local random stream; equal seeds reproduce the
        realization exactly.

    Returns
    -------
    ChannelSet

    Raises
    ------
    ParameterError
        For out-of-range sizes or an unknown model tag.
    """
    if users < 3:
        raise ParameterError(f"need at least 3 users, got {users}")
    if slots < 2:
        raise ParameterError(f"need at least 2 slots, got {slots}")
    if model not in CHANNEL_MODELS:
        raise ParameterError(f"unknown channel model {model!r}")
    if model == SLOW_CHANGING and slots % 2:
        raise ParameterError("slow_changing model requires an even slot count")

    rng = np.random.default_rng(seed)
    if model == CONSTANT:
        base = _sample_unit_complex(rng, (users, users))
        entries = np.repeat(base[:, :, None], slots, axis=2)
    elif model == SLOW_CHANGING:
        half = slots // 2
        first = _sample_unit_complex(rng, (users, users))
        second = _sample_unit_complex(rng, (users, users))
        entries = np.concatenate(
            [np.repeat(first[:, :, None], half, axis=2), np.repeat(second[:, :, None], slots - half, axis=2)],
            axis=2,
        )
    else:
        entries = _sample_unit_complex(rng, (users, users, slots))
    return ChannelSet(users=users, slots=slots, entries=entries, model_tag=model)


def generate_gains(users: int, slots: int, seed: int) -> GainPlan:
    """Draw seeded artificial gain sequences.

    Alpha (transmit) gains are drawn before beta (receive) gains from a
    single stream, so one seed pins the whole plan. Entries are circularly
    symmetric unit-variance complex normals with magnitudes kept above
    ``MIN_DRAW_MAGNITUDE``.
    """
    if users < 1:
        raise ParameterError(f"need at least 1 user, got {users}")
    if slots < 1:
        raise ParameterError(f"need at least 1 slot, got {slots}")
    rng = np.random.default_rng(seed)
    alpha = _sample_unit_complex(rng, (users, slots))
    beta = _sample_unit_complex(rng, (users, slots))
    return GainPlan(users=users, slots=slots, alpha=alpha, beta=beta)


def build_effective(channels: ChannelSet, gains: GainPlan | None, coding: str) -> EffectiveChannel:
    """Combine raw channels and gains into diagonal effective channels.

    Parameters
    ----------
    channels : ChannelSet
    gains : GainPlan or None
        Required for ``naive`` and ``double`` coding, where it must match
        ``channels`` in shape. ``plain`` ignores any supplied plan.
    coding : str
        One of ``plain``, ``naive``, ``double``.

    Returns
    -------
    EffectiveChannel

    Raises
    ------
    ParameterError
        Unknown coding tag, missing gains, shape mismatch, or odd slot
        count under ``double``.
    DegenerateRealizationError
        A paired sum under ``double`` coding cancelled to below
        ``DEGENERATE_REL_TOL`` of its matrix mean magnitude.
    """
    if coding not in CODING_MODES:
        raise ParameterError(f"unknown coding mode {coding!r}")
    if coding == PLAIN:
        return EffectiveChannel(
            users=channels.users,
            dim=channels.slots,
            diagonals=channels.entries.copy(),
            coding_tag=coding,
            channels=channels,
            gains=None,
        )

    if gains is None:
        raise ParameterError(f"{coding} coding requires a gain plan")
    if (gains.users, gains.slots) != (channels.users, channels.slots):
        raise ParameterError(
            f"gain plan shape ({gains.users}, {gains.slots}) != channel shape ({channels.users}, {channels.slots})"
        )

    scaled = gains.beta[:, None, :] * channels.entries * gains.alpha[None, :, :]
    if coding == NAIVE:
        return EffectiveChannel(
            users=channels.users,
            dim=channels.slots,
            diagonals=scaled,
            coding_tag=coding,
            channels=channels,
            gains=gains,
        )

    if channels.slots % 2:
        raise ParameterError("double coding requires an even slot count")
    half = channels.slots // 2
    diagonals = scaled[:, :, :half] + scaled[:, :, half:]
    mags = np.abs(diagonals)
    mean_mag = mags.mean(axis=2, keepdims=True)
    # <= so an all-zero link (mean 0) also counts as cancelled
    cancelled = mags <= DEGENERATE_REL_TOL * mean_mag
    if cancelled.any():
        k, j, _ = np.unravel_index(int(np.argmax(cancelled)), cancelled.shape)
        raise DegenerateRealizationError(
            f"paired gains cancelled on link ({k + 1}, {j + 1}); redraw the gain plan"
        )
    return EffectiveChannel(
        users=channels.users,
        dim=half,
        diagonals=diagonals,
        coding_tag=coding,
        channels=channels,
        gains=gains,
    )
