"""Test-time image corruptions: additive Gaussian noise, multiplicative
speckle noise, contrast rescaling, and Poisson noise applied after a
contrast change.

All functions operate on images with pixel values in [0, 1] and clamp the
result back into that range. Every corruption is a pure function of
(image, parameters, rng seed): evaluating the same image with the same
derived seed gives bitwise-identical output regardless of scheduling.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

KINDS = ("none", "gaussian", "speckle", "contrast", "poisson")
_KIND_CODE = {k: i for i, k in enumerate(KINDS)}


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str = "none"
    variance: float = 0.0        # gaussian / speckle
    contrast: float = 1.0        # contrast / poisson
    peak: int = 255              # poisson photon-count scale

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown perturbation kind {self.kind!r}")
        if self.variance < 0:
            raise ConfigError(f"variance must be non-negative, got {self.variance}")
        if self.contrast <= 0:
            raise ConfigError(f"contrast must be positive, got {self.contrast}")
        if self.peak <= 0:
            raise ConfigError(f"peak must be positive, got {self.peak}")

    @property
    def param(self):
        """The scalar swept in result tables: sigma^2 for noise kinds,
        C for contrast-based kinds, 0 for none."""
        if self.kind in ("gaussian", "speckle"):
            return self.variance
        if self.kind in ("contrast", "poisson"):
            return self.contrast
        return 0.0


def image_rng(master_seed, spec, image_index):
    """Independent generator per (master seed, perturbation, image), so
    parallel evaluation is reproducible regardless of scheduling."""
    param_bits = int(np.float64(spec.param).view(np.uint64))
    ss = np.random.SeedSequence(
        [int(master_seed), _KIND_CODE[spec.kind], param_bits, int(image_index)])
    return np.random.default_rng(ss)


def _clip(x):
    return np.clip(x, 0.0, 1.0)


def apply_gaussian(image, sigma2, rng, clip=True):
    """out = clamp(image + n, 0, 1) with n ~ N(0, sigma^2) i.i.d."""
    if sigma2 < 0:
        raise ConfigError(f"variance must be non-negative, got {sigma2}")
    if sigma2 == 0:
        return image
    out = image + rng.normal(0.0, np.sqrt(sigma2), image.shape)
    return _clip(out) if clip else out


def apply_speckle(image, sigma2, rng, clip=True):
    """out = clamp(image + image*n, 0, 1): multiplicative noise, so black
    pixels stay exactly black."""
    if sigma2 < 0:
        raise ConfigError(f"variance must be non-negative, got {sigma2}")
    if sigma2 == 0:
        return image
    out = image + image * rng.normal(0.0, np.sqrt(sigma2), image.shape)
    return _clip(out) if clip else out


def apply_contrast(image, contrast):
    """out = clamp((image - 0.5)*C + 0.5, 0, 1); 0.5 is a fixed point."""
    if contrast <= 0:
        raise ConfigError(f"contrast must be positive, got {contrast}")
    return _clip((image - 0.5) * contrast + 0.5)


def sample_poisson(lam, rng):
    """Poisson sampler: inverse transform for lambda < 30, rounded normal
    approximation above. Vectorized and deterministic given the rng."""
    lam = np.asarray(lam, dtype=np.float64)
    out = np.empty(lam.shape, dtype=np.float64)

    small = lam < 30
    if small.any():
        l_small = lam[small]
        u = rng.random(l_small.shape)
        p = np.exp(-l_small)
        cdf = p.copy()
        k = np.zeros_like(l_small)
        active = u > cdf
        # lambda < 30 => P(X > 150) is negligible
        for _ in range(150):
            if not active.any():
                break
            k[active] += 1
            p[active] *= l_small[active] / k[active]
            cdf[active] += p[active]
            active = u > cdf
        out[small] = k

    big = ~small
    if big.any():
        l_big = lam[big]
        draws = rng.normal(l_big, np.sqrt(l_big))
        out[big] = np.maximum(np.rint(draws), 0.0)
    return out


def apply_poisson_after_contrast(image, contrast, rng, peak=255, clip=True):
    """Rescale contrast, then sample photon counts at the given peak:
    out = clamp(Poisson(I_C * peak)/peak, 0, 1)."""
    if peak <= 0:
        raise ConfigError(f"peak must be positive, got {peak}")
    x = apply_contrast(image, contrast)
    out = sample_poisson(x * peak, rng) / peak
    out = out.astype(image.dtype)
    return _clip(out) if clip else out


def apply(image, spec, rng):
    """Dispatch a PerturbationSpec; kind='none' is the exact identity."""
    if spec.kind == "none":
        return image
    if spec.kind == "gaussian":
        return apply_gaussian(image, spec.variance, rng)
    if spec.kind == "speckle":
        return apply_speckle(image, spec.variance, rng)
    if spec.kind == "contrast":
        return apply_contrast(image, spec.contrast)
    return apply_poisson_after_contrast(image, spec.contrast, rng, spec.peak)


def parse_grid(text):
    """Parse a sweep like 'none;gaussian:0,0.1,0.2;poisson:0.5,1,2' into a
    list of PerturbationSpec cells."""
    cells = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            kind, values = part.split(":", 1)
            kind = kind.strip()
            params = [float(v) for v in values.split(",") if v.strip()]
        else:
            kind, params = part, [0.0]
        if kind == "none":
            cells.append(PerturbationSpec(kind="none"))
        elif kind in ("gaussian", "speckle"):
            cells.extend(PerturbationSpec(kind=kind, variance=v) for v in params)
        elif kind in ("contrast", "poisson"):
            cells.extend(PerturbationSpec(kind=kind, contrast=v) for v in params)
        else:
            raise ConfigError(f"unknown perturbation kind {kind!r} in grid {text!r}")
    return cells
