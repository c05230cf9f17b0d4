"""Plane-wave optics of planar layer stacks.

Transfer-matrix reflection/transmission for arbitrary stacks of isotropic
layers between two semi-infinite media, plus quarter-wave Bragg-mirror
construction.

Conventions (enforced by the half-wave / quarter-wave identity tests):
    * time dependence exp(-i w t), propagation phase exp(+i kz d)
    * kz = sqrt((n k0)^2 - kpar^2) on the branch Im(kz) >= 0,
      with Re(kz) >= 0 for lossless propagating waves
    * TM (p) amplitude coefficients follow the convention in which
      r_TM = -r_TE at normal incidence
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from numpy.lib.scimath import sqrt as csqrt

from .errors import InvalidInput

TE = "TE"
TM = "TM"

# Material constants at the 900 nm design wavelength.  Only n_GaAs is pinned
# by tabulated data; n_AlAs is the usual near-IR value and Al0.98Ga0.02As is
# treated as AlAs.  Dispersionless by design.
N_GAAS = 3.5
N_ALAS = 2.95
DESIGN_WAVELENGTH_NM = 900.0


def _check_index(n):
    n = complex(n)
    if not (np.isfinite(n.real) and np.isfinite(n.imag)):
        raise InvalidInput(f"refractive index must be finite, got {n}")
    if n.real <= 0:
        raise InvalidInput(f"refractive index must have Re > 0, got {n}")
    return n


@dataclass(frozen=True)
class Layer:
    """A finite-thickness optical layer. Semi-infinite media live on LayerStack."""

    thickness: float  # nm
    refractive_index: complex

    def __post_init__(self):
        if not np.isfinite(self.thickness) or self.thickness <= 0:
            raise InvalidInput(
                f"layer thickness must be finite and positive, got {self.thickness}"
            )
        n = _check_index(self.refractive_index)
        if n.imag < 0:
            raise InvalidInput(f"passive media only: Im(n) >= 0, got {n}")
        object.__setattr__(self, "refractive_index", n)


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers between two half-spaces.

    ``entry_index`` is the half-space the incident wave comes from; layers are
    ordered from the entry side to the exit side.
    """

    entry_index: complex
    layers: Tuple[Layer, ...]
    exit_index: complex

    def __post_init__(self):
        object.__setattr__(self, "entry_index", _check_index(self.entry_index))
        object.__setattr__(self, "exit_index", _check_index(self.exit_index))
        object.__setattr__(self, "layers", tuple(self.layers))

    def reversed(self):
        """The same physical stack probed from the exit side."""
        return LayerStack(self.exit_index, tuple(reversed(self.layers)), self.entry_index)


@dataclass(frozen=True)
class PlaneWaveQuery:
    vacuum_wavelength: float  # nm
    in_plane_wavevector: float = 0.0  # rad/nm; may exceed the entry light line
    polarization: str = TE

    def __post_init__(self):
        if not np.isfinite(self.vacuum_wavelength) or self.vacuum_wavelength <= 0:
            raise InvalidInput(f"wavelength must be > 0, got {self.vacuum_wavelength}")
        if not np.isfinite(self.in_plane_wavevector) or self.in_plane_wavevector < 0:
            raise InvalidInput(
                f"in-plane wavevector must be >= 0, got {self.in_plane_wavevector}"
            )
        if self.polarization not in (TE, TM):
            raise InvalidInput(f"polarization must be TE or TM, got {self.polarization!r}")

    @property
    def k0(self):
        return 2.0 * np.pi / self.vacuum_wavelength


def kz_normal(n, k0, kpar):
    """Layer-normal wavevector on the physical branch (vectorized over kpar)."""
    # Principal csqrt already gives Im >= 0 for passive media and +i|kz| for
    # evanescent waves in lossless ones; it is also the analytic continuation
    # used by the complex-contour dissipation integral.
    return csqrt((n * k0) ** 2 - np.asarray(kpar, dtype=complex) ** 2)


def _interface_rt(n1, n2, kz1, kz2, polarization):
    if polarization == TE:
        denom = kz1 + kz2
        r = (kz1 - kz2) / denom
        t = 2.0 * kz1 / denom
    else:
        denom = n2 ** 2 * kz1 + n1 ** 2 * kz2
        r = (n2 ** 2 * kz1 - n1 ** 2 * kz2) / denom
        t = 2.0 * n1 * n2 * kz1 / denom
    return r, t


def fresnel_interface(n1, n2, query: PlaneWaveQuery):
    """Amplitude r, t of the bare n1 -> n2 interface for the given query."""
    n1 = _check_index(n1)
    n2 = _check_index(n2)
    k0 = query.k0
    kz1 = kz_normal(n1, k0, query.in_plane_wavevector)
    kz2 = kz_normal(n2, k0, query.in_plane_wavevector)
    r, t = _interface_rt(n1, n2, kz1, kz2, query.polarization)
    return complex(r), complex(t)


def stack_rt(stack: LayerStack, vacuum_wavelength, kpar, polarization, im_reg=0.0):
    """Vectorized amplitude reflection/transmission of a stack.

    ``kpar`` may be a scalar or array, real or complex (complex values are used
    by the contour-deformed dipole dissipation integral).  ``im_reg`` adds a
    small imaginary part to every finite-layer index, regularizing guided-mode
    poles.  Phase is referenced to the entry-side boundary.
    """
    kpar = np.asarray(kpar, dtype=complex)
    k0 = 2.0 * np.pi / vacuum_wavelength
    indices = [stack.entry_index]
    for layer in stack.layers:
        indices.append(layer.refractive_index + 1j * im_reg)
    indices.append(stack.exit_index)
    kz = [kz_normal(n, k0, kpar) for n in indices]

    # 2x2 transfer matrix as four broadcastable components.
    m00 = np.ones_like(kpar)
    m01 = np.zeros_like(kpar)
    m10 = np.zeros_like(kpar)
    m11 = np.ones_like(kpar)
    for j in range(len(indices) - 1):
        r, t = _interface_rt(indices[j], indices[j + 1], kz[j], kz[j + 1], polarization)
        if j < len(stack.layers):
            delta = kz[j + 1] * stack.layers[j].thickness
            pf = np.exp(-1j * delta)
            pb = np.exp(+1j * delta)
        else:
            pf = pb = 1.0
        # M <- M . I(j, j+1) . P(j+1)
        a00 = pf / t
        a01 = pb * r / t
        a10 = pf * r / t
        a11 = pb / t
        m00, m01, m10, m11 = (
            m00 * a00 + m01 * a10,
            m00 * a01 + m01 * a11,
            m10 * a00 + m11 * a10,
            m10 * a01 + m11 * a11,
        )
    return m10 / m00, 1.0 / m00


def stack_response(stack: LayerStack, query: PlaneWaveQuery):
    """Total amplitude (r, t) through the full stack for a single query."""
    r, t = stack_rt(
        stack, query.vacuum_wavelength, query.in_plane_wavevector, query.polarization
    )
    return complex(r), complex(t)


def power_reflectance(stack: LayerStack, query: PlaneWaveQuery):
    r, _ = stack_response(stack, query)
    return abs(r) ** 2


def power_transmittance(stack: LayerStack, query: PlaneWaveQuery):
    """Energy transmittance including the admittance weight (both polarizations)."""
    _, t = stack_response(stack, query)
    k0 = query.k0
    kz_in = kz_normal(stack.entry_index, k0, query.in_plane_wavevector)
    kz_out = kz_normal(stack.exit_index, k0, query.in_plane_wavevector)
    if query.polarization == TE:
        weight = np.real(kz_out) / np.real(kz_in)
    else:
        weight = np.real(kz_out * np.conj(stack.exit_index) / stack.exit_index) / np.real(
            kz_in * np.conj(stack.entry_index) / stack.entry_index
        )
    return float(abs(t) ** 2 * weight)


def build_bragg(
    n_high,
    n_low,
    design_wavelength=DESIGN_WAVELENGTH_NM,
    periods=0,
    entry_index=1.0,
    exit_index=N_GAAS,
):
    """Quarter-wave stack of ``periods`` (low, high) pairs, entry side first.

    With this ordering the normal-incidence reflectance follows the classic
    closed form R = [(1 - (n_exit/n_entry)(n_low/n_high)^(2N)) /
    (1 + (n_exit/n_entry)(n_low/n_high)^(2N))]^2 and grows monotonically with N.
    """
    if int(periods) != periods or periods < 0:
        raise InvalidInput(f"period count must be a nonnegative integer, got {periods}")
    n_high = _check_index(n_high)
    n_low = _check_index(n_low)
    if design_wavelength <= 0:
        raise InvalidInput(f"design wavelength must be > 0, got {design_wavelength}")
    layers = []
    for _ in range(int(periods)):
        layers.append(Layer(design_wavelength / (4.0 * n_low.real), n_low))
        layers.append(Layer(design_wavelength / (4.0 * n_high.real), n_high))
    return LayerStack(entry_index, tuple(layers), exit_index)
