"""Parameter sets and their key=value preset files."""

from __future__ import annotations

import dataclasses
import os
from importlib import resources
from pathlib import Path

PRESET_FORMAT_VERSION = 1
PRESET_ENV_VAR = "TFHE_BKU_PRESET"
MAX_UNROLL = 5


class ParameterError(ValueError):
    """Raised for inconsistent or unparsable parameter sets."""


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclasses.dataclass(frozen=True)
class ParameterSet:
    security_lambda: int
    lwe_dimension: int
    ring_degree: int
    trlwe_dimension: int
    gadget_base: int
    gadget_length: int
    ks_base_log: int
    ks_length: int
    lwe_noise_stddev: float
    trlwe_noise_stddev: float
    unroll_factor: int = 2
    twiddle_bitwidth: int = 64

    def __post_init__(self):
        self.validate()

    # short names used throughout the math-heavy modules
    @property
    def n(self) -> int:
        return self.lwe_dimension

    @property
    def N(self) -> int:
        return self.ring_degree

    @property
    def k(self) -> int:
        return self.trlwe_dimension

    @property
    def Bg(self) -> int:
        return self.gadget_base

    @property
    def l(self) -> int:  # noqa: E743
        return self.gadget_length

    @property
    def m(self) -> int:
        return self.unroll_factor

    @property
    def beta(self) -> int:
        return self.twiddle_bitwidth

    @property
    def bg_bits(self) -> int:
        return self.gadget_base.bit_length() - 1

    @property
    def group_count(self) -> int:
        """Blind-rotation steps per bootstrap, ceil(n/m)."""
        return -(-self.lwe_dimension // self.unroll_factor)

    @property
    def extracted_dimension(self) -> int:
        return self.ring_degree * self.trlwe_dimension

    def validate(self) -> None:
        if self.lwe_dimension < 1:
            raise ParameterError("lwe_dimension must be >= 1")
        if not _is_pow2(self.ring_degree) or self.ring_degree < 4:
            raise ParameterError("ring_degree must be a power of two >= 4")
        if self.trlwe_dimension < 1:
            raise ParameterError("trlwe_dimension must be >= 1")
        if not _is_pow2(self.gadget_base) or self.gadget_base < 2:
            raise ParameterError("gadget_base must be a power of two >= 2")
        if self.gadget_length < 1 or self.bg_bits * self.gadget_length > 32:
            raise ParameterError("need 1 <= gadget_length and l*log2(Bg) <= 32")
        if self.ks_length < 1:
            raise ParameterError("ks_length must be >= 1")
        if self.ks_base_log < 1 or self.ks_base_log * self.ks_length > 32:
            raise ParameterError("need ks_base_log >= 1 and ks_base_log*ks_length <= 32")
        if self.lwe_noise_stddev < 0 or self.trlwe_noise_stddev < 0:
            raise ParameterError("noise stddevs must be non-negative")
        if not 1 <= self.unroll_factor <= min(MAX_UNROLL, self.lwe_dimension):
            raise ParameterError(
                f"unroll_factor must lie in [1, min({MAX_UNROLL}, n)], got {self.unroll_factor}"
            )
        if not 4 <= self.twiddle_bitwidth <= 64:
            raise ParameterError("twiddle_bitwidth must lie in [4, 64]")
        if self.unroll_factor >= 4 and self.twiddle_bitwidth < 64:
            raise ParameterError("unroll_factor >= 4 requires twiddle_bitwidth = 64")

    def replace(self, **changes) -> "ParameterSet":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = [f"version = {PRESET_FORMAT_VERSION}"]
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {v!r}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ParameterSet)}


def parse_preset(text: str) -> ParameterSet:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val
    version = int(values.pop("version", PRESET_FORMAT_VERSION))
    if version != PRESET_FORMAT_VERSION:
        raise ParameterError(f"unsupported preset version {version}")
    unknown = set(values) - set(_FIELD_TYPES)
    if unknown:
        raise ParameterError(f"unknown keys: {sorted(unknown)}")
    kwargs = {}
    for name, typ in _FIELD_TYPES.items():
        if name not in values:
            continue
        try:
            kwargs[name] = float(values[name]) if typ == "float" else int(values[name])
        except ValueError as exc:
            raise ParameterError(f"{name}: {exc}") from None
    try:
        return ParameterSet(**kwargs)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None


def builtin_presets() -> list[str]:
    root = resources.files("tfhe_bku") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_preset(name_or_path: str | os.PathLike | None = None) -> ParameterSet:
    """Load a preset by builtin name or file path.

    ``None`` falls back to the ``TFHE_BKU_PRESET`` environment variable and
    then to the embedded ``default`` preset.
    """
    if name_or_path is None:
        name_or_path = os.environ.get(PRESET_ENV_VAR) or "default"
    path = Path(name_or_path)
    if path.suffix == ".cfg" or path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise ParameterError(f"cannot read preset {path}: {exc}") from None
    else:
        res = resources.files("tfhe_bku") / "presets" / f"{name_or_path}.cfg"
        if not res.is_file():
            raise ParameterError(f"no builtin preset named {name_or_path!r}")
        text = res.read_text()
    return parse_preset(text)


def default_params(**changes) -> ParameterSet:
    p = load_preset("default")
    return p.replace(**changes) if changes else p
