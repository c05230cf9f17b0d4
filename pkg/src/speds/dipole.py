"""Far-field emission and collection efficiency of an in-plane dipole in a
planar layer structure.

The solver expands the dipole field in plane waves over the in-plane
wavevector.  For each k-parallel the upward/downward source amplitudes (TE
symmetric, TM antisymmetric for a horizontal dipole) are combined with the
mirror responses of the upper and lower stacks and the two-mirror resonance
denominator.  Propagating components map to far-field polar angles in the two
half-spaces; the total dissipated power is an integral over all k-parallel up
to the host light line, evaluated on a contour deformed into the complex
plane so that guided-mode poles (which sit on or just above the real axis)
are captured without chasing needle-thin resonances numerically.

All powers are normalized to the power of the same dipole in an unbounded
host medium.  Results are averaged over two orthogonal in-plane dipole
orientations.
"""

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidInput, NumericalFailure, UnsupportedInput
from .multilayer import TE, TM, LayerStack, _check_index, stack_rt

_GL_CACHE = {}


def _gauss_nodes(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def _panel_integrate(f, a, b, panels, order):
    x, w = _gauss_nodes(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = f(nodes).reshape(panels, order)
    return np.sum(vals * w[None, :] * half[:, None])


def adaptive_integral(f, a, b, rel_tol=1e-6, min_panels=8, max_doublings=8, order=24):
    """Composite Gauss-Legendre with panel doubling until converged."""
    panels = min_panels
    prev = _panel_integrate(f, a, b, panels, order)
    for _ in range(max_doublings):
        panels *= 2
        cur = _panel_integrate(f, a, b, panels, order)
        scale = max(abs(cur), 1e-12)
        change = abs(cur - prev)
        if change <= rel_tol * scale:
            return cur
        prev = cur
    raise NumericalFailure(
        f"k-parallel quadrature did not converge on [{a}, {b}]: "
        f"{panels} panels, last change {change:.3e} vs "
        f"tolerance {rel_tol:.1e} * {scale:.3e}"
    )


@dataclass(frozen=True)
class DipoleSource:
    """In-plane dipole embedded in a (lossless by default) host layer."""

    vacuum_wavelength: float  # nm
    host_index: complex
    distance_to_upper_stack: float  # nm
    distance_to_lower_stack: float  # nm

    def __post_init__(self):
        if self.vacuum_wavelength <= 0:
            raise InvalidInput(f"wavelength must be > 0, got {self.vacuum_wavelength}")
        object.__setattr__(self, "host_index", _check_index(self.host_index))
        for d in (self.distance_to_upper_stack, self.distance_to_lower_stack):
            if not np.isfinite(d) or d < 0:
                raise InvalidInput(f"stack distances must be >= 0, got {d}")


@dataclass(frozen=True)
class EmissionGeometry:
    """Upper and lower stacks as seen from the dipole's layer."""

    upper: LayerStack
    lower: LayerStack
    source: DipoleSource

    def __post_init__(self):
        host = self.source.host_index
        for name, stack in (("upper", self.upper), ("lower", self.lower)):
            if abs(stack.entry_index - host) > 1e-9:
                raise InvalidInput(
                    f"{name} stack entry index {stack.entry_index} does not match "
                    f"the dipole host index {host}"
                )
        for stack in (self.upper, self.lower):
            if stack.exit_index.imag < 0 or any(
                l.refractive_index.imag < 0 for l in stack.layers
            ):
                raise UnsupportedInput("gain media (Im n < 0) are not supported")
        if host.imag < 0:
            raise UnsupportedInput("gain media (Im n < 0) are not supported")


@dataclass
class AngularPowerSpectrum:
    """Power flow per unit polar angle; theta = 0 is the upward growth axis."""

    theta_grid: np.ndarray  # degrees, ascending over [0, 180]
    power_density: np.ndarray  # power per radian of polar angle
    guided_power: float
    total_power: float
    guided_in_pattern: bool = False

    # Integrating power_density over theta (in radians) plus guided_power
    # recovers total_power.  With guided_in_pattern=True the guided power has
    # additionally been folded into the bin at 90 degrees, mimicking what a
    # far-field sphere many wavelengths across would intercept from light
    # trapped in the planar waveguide; the density integral then equals
    # total_power by itself.

    def __post_init__(self):
        self.theta_grid = np.asarray(self.theta_grid, dtype=float)
        self.power_density = np.asarray(self.power_density, dtype=float)
        if self.theta_grid.shape != self.power_density.shape:
            raise InvalidInput("theta_grid and power_density must have equal length")

    def _bin_edges_rad(self):
        th = np.radians(self.theta_grid)
        mid = 0.5 * (th[1:] + th[:-1])
        return np.concatenate(([th[0]], mid, [th[-1]]))

    def cone_power(self, theta_max_deg):
        """Radiated power in [0, theta_max_deg], from the piecewise-constant bins."""
        edges = self._bin_edges_rad()
        tmax = np.radians(theta_max_deg)
        lo = edges[:-1]
        hi = edges[1:]
        overlap = np.clip(np.minimum(hi, tmax) - lo, 0.0, None)
        return float(np.sum(self.power_density * overlap))

    def radiated_power(self):
        edges = self._bin_edges_rad()
        return float(np.sum(self.power_density * np.diff(edges)))

    def to_csv(self, path_or_buf):
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, "w") as fh:
                self.to_csv(fh)
            return
        fh = path_or_buf
        fh.write(f"# guided_power = {self.guided_power:.10e}\n")
        fh.write(f"# total_power = {self.total_power:.10e}\n")
        fh.write(f"# guided_in_pattern = {int(self.guided_in_pattern)}\n")
        fh.write("theta_deg,power_density\n")
        for th, p in zip(self.theta_grid, self.power_density):
            fh.write(f"{th:.4f},{p:.10e}\n")

    @classmethod
    def from_csv(cls, path):
        guided = total = None
        folded = False
        theta, dens = [], []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line.startswith("#"):
                    key, _, val = line[1:].partition("=")
                    if key.strip() == "guided_power":
                        guided = float(val)
                    elif key.strip() == "total_power":
                        total = float(val)
                    elif key.strip() == "guided_in_pattern":
                        folded = bool(int(val))
                elif line and not line.startswith("theta_deg"):
                    a, b = line.split(",")
                    theta.append(float(a))
                    dens.append(float(b))
        return cls(np.array(theta), np.array(dens), guided, total, folded)


class _CavityFields:
    """Evaluates mirror amplitudes and escape densities for one geometry."""

    def __init__(self, geometry: EmissionGeometry, im_reg=1e-6, denom_floor=1e-3):
        self.g = geometry
        self.im_reg = float(im_reg)
        self.denom_floor = float(denom_floor)
        self.wl = geometry.source.vacuum_wavelength
        self.k0 = 2.0 * np.pi / self.wl
        self.n_host = geometry.source.host_index.real

    def _mirrors(self, chi):
        """a-coefficients at complex host angle chi (vectorized)."""
        u = np.sin(chi)
        kpar = self.n_host * self.k0 * u
        kz_host = self.n_host * self.k0 * np.cos(chi)
        out = {}
        for pol in (TE, TM):
            r_up, _ = stack_rt(self.g.upper, self.wl, kpar, pol, self.im_reg)
            r_dn, _ = stack_rt(self.g.lower, self.wl, kpar, pol, self.im_reg)
            out[pol] = (
                r_up * np.exp(2j * kz_host * self.g.source.distance_to_upper_stack),
                r_dn * np.exp(2j * kz_host * self.g.source.distance_to_lower_stack),
            )
        return out

    def dissipation_integrand(self, chi):
        """Total-power integrand G(chi) so that P = Re integral G dchi."""
        m = self._mirrors(chi)
        a_up_te, a_dn_te = m[TE]
        a_up_tm, a_dn_tm = m[TM]
        s, c = np.sin(chi), np.cos(chi)
        te = (1.0 + a_up_te) * (1.0 + a_dn_te) / (1.0 - a_up_te * a_dn_te)
        tm = (1.0 - a_up_tm) * (1.0 - a_dn_tm) / (1.0 - a_up_tm * a_dn_tm)
        return 0.75 * s * (te + c ** 2 * tm)

    def total_power(self, rel_tol=1e-6, contour_depth=0.12):
        h = contour_depth

        def f(t):
            chi = t - 1j * h * np.sin(2.0 * t)
            dchi = 1.0 - 2j * h * np.cos(2.0 * t)
            return self.dissipation_integrand(chi) * dchi

        val = adaptive_integral(f, 0.0, 0.5 * np.pi, rel_tol=rel_tol)
        return float(np.real(val))

    def escape_density(self, theta_rad, side):
        """Power per radian of polar angle radiated into one half-space.

        ``theta_rad`` is measured from the outward normal of that half-space
        (air side: from +z; substrate side: from -z).
        """
        theta_rad = np.asarray(theta_rad, dtype=float)
        stack = self.g.upper if side == "top" else self.g.lower
        dist_same = (
            self.g.source.distance_to_upper_stack
            if side == "top"
            else self.g.source.distance_to_lower_stack
        )
        dist_opp = (
            self.g.source.distance_to_lower_stack
            if side == "top"
            else self.g.source.distance_to_upper_stack
        )
        opp_stack = self.g.lower if side == "top" else self.g.upper
        n_out = stack.exit_index.real
        u = (n_out / self.n_host) * np.sin(theta_rad)
        cos2chi = 1.0 - u ** 2
        cos2chi = np.maximum(cos2chi, 1e-15)
        kpar = self.n_host * self.k0 * u
        kz_host = self.n_host * self.k0 * np.sqrt(cos2chi)
        dens = np.zeros_like(theta_rad)
        prefac = (
            0.375
            * (n_out / self.n_host) ** 3
            * np.sin(theta_rad)
            * np.cos(theta_rad) ** 2
        )
        floor2 = self.denom_floor ** 2
        for pol, sign in ((TE, +1.0), (TM, -1.0)):
            r_same, t_same = stack_rt(stack, self.wl, kpar, pol, self.im_reg)
            r_opp, _ = stack_rt(opp_stack, self.wl, kpar, pol, self.im_reg)
            a_same = r_same * np.exp(2j * kz_host * dist_same)
            a_opp = r_opp * np.exp(2j * kz_host * dist_opp)
            denom = np.abs(1.0 - a_same * a_opp) ** 2 + floor2
            num = np.abs(1.0 + sign * a_opp) ** 2 * np.abs(t_same) ** 2
            if pol == TE:
                contrib = num / (denom * cos2chi)
            else:
                contrib = num / denom
            dens += prefac * contrib
        return dens


def emission_pattern(
    geometry: EmissionGeometry,
    angular_resolution=0.25,
    rel_tol=1e-6,
    im_reg=1e-6,
    bin_order=12,
    include_guided_spike=False,
):
    """Orientation-averaged in-plane-dipole power versus polar angle.

    power_density is the per-bin average power per radian; summing
    density * bin width over the grid plus guided_power recovers total_power.
    """
    if angular_resolution > 0.5 or angular_resolution <= 0:
        raise InvalidInput(
            f"angular_resolution must be in (0, 0.5] degrees, got {angular_resolution}"
        )
    fields = _CavityFields(geometry, im_reg=im_reg)
    total = fields.total_power(rel_tol=rel_tol)

    res = float(angular_resolution)
    theta_grid = np.arange(0.0, 180.0 + 0.5 * res, res)
    th_rad = np.radians(theta_grid)
    mid = 0.5 * (th_rad[1:] + th_rad[:-1])
    edges = np.concatenate(([th_rad[0]], mid, [th_rad[-1]]))
    half_pi = 0.5 * np.pi

    x, w = _gauss_nodes(bin_order)
    density = np.zeros_like(theta_grid)
    radiated = {"top": 0.0, "bottom": 0.0}
    for i in range(len(theta_grid)):
        lo, hi = edges[i], edges[i + 1]
        width = hi - lo
        if width <= 0:
            continue
        integral = 0.0
        for side, (a, b) in (
            ("top", (lo, min(hi, half_pi))),
            ("bottom", (max(lo, half_pi), hi)),
        ):
            if b <= a:
                continue
            h2 = 0.5 * (b - a)
            nodes = 0.5 * (a + b) + h2 * x
            # convert to the half-space's own polar angle
            th_loc = nodes if side == "top" else np.pi - nodes
            vals = fields.escape_density(th_loc, side)
            part = float(np.sum(vals * w) * h2)
            integral += part
            radiated[side] += part
        density[i] = integral / width

    radiated_sum = radiated["top"] + radiated["bottom"]
    guided = total - radiated_sum
    if guided < -0.005 * total:
        raise NumericalFailure(
            f"energy bookkeeping failed: radiated {radiated_sum:.6f} exceeds "
            f"total dissipated power {total:.6f} by more than 0.5%"
        )
    guided = max(guided, 0.0)
    if include_guided_spike and guided > 0:
        i90 = int(np.argmin(np.abs(theta_grid - 90.0)))
        density[i90] += guided / (edges[i90 + 1] - edges[i90])
    return AngularPowerSpectrum(
        theta_grid, density, guided, total, guided_in_pattern=include_guided_spike
    )


def collection_efficiency(spectrum: AngularPowerSpectrum, numerical_aperture):
    """Fraction of total power radiated into the top-side collection cone."""
    na = float(numerical_aperture)
    if not (0.0 < na <= 1.0):
        raise InvalidInput(f"numerical aperture must be in (0, 1], got {na}")
    theta_c = np.degrees(np.arcsin(na))
    return spectrum.cone_power(theta_c) / spectrum.total_power


def direct_collection_efficiency(
    geometry: EmissionGeometry, numerical_aperture, rel_tol=1e-6, im_reg=1e-6
):
    """Collection efficiency without building the full angular pattern."""
    na = float(numerical_aperture)
    if not (0.0 < na <= 1.0):
        raise InvalidInput(f"numerical aperture must be in (0, 1], got {na}")
    fields = _CavityFields(geometry, im_reg=im_reg)
    total = fields.total_power(rel_tol=rel_tol)
    theta_c = np.arcsin(na / geometry.upper.exit_index.real)
    cone = adaptive_integral(
        lambda th: fields.escape_density(th, "top"), 0.0, theta_c, rel_tol=rel_tol
    )
    return float(np.real(cone)) / total


def analytic_no_cavity_efficiency(n, numerical_aperture):
    """Closed-form collection efficiency of a dipole below a bare high-index
    surface: normal-incidence Fresnel transmission times the in-plane dipole
    power within the internal escape cone."""
    n = float(n)
    na = float(numerical_aperture)
    if n <= 1.0:
        raise InvalidInput(f"host index must exceed 1, got {n}")
    if not (0.0 < na <= 1.0):
        raise InvalidInput(f"numerical aperture must be in (0, 1], got {na}")
    c = np.cos(np.arcsin(na / n))
    fresnel = 1.0 - ((n - 1.0) / (n + 1.0)) ** 2
    return fresnel * (0.5 - 0.375 * c - 0.125 * c ** 3)
