"""Exception types shared across the package."""


class AntiwickError(Exception):
    """Base class for all package-specific errors."""


class NonIntegralLevel(AntiwickError):
    """Torus area is not an integer multiple of the Planck cell 2*pi*hbar."""


class NonHermitianCoefficients(AntiwickError):
    """Fourier coefficients do not satisfy c[-m,-n] == conj(c[m,n])."""


class LatticeTooCoarse(AntiwickError):
    """Estimated quadrature error of a plane-lattice operation exceeds the
    caller-supplied tolerance."""


class QuadratureBudgetExceeded(AntiwickError):
    """Torus quadrature cannot resolve the basis (Gram residual too large)."""


class ExtrapolationUnstable(AntiwickError):
    """Plateau fit over the regularization schedule failed its diagnostics."""


class MissingRoute(AntiwickError):
    """Comparison requested but one of the two propagator routes is absent."""


class ConfigError(AntiwickError):
    """Experiment configuration file is malformed or inconsistent."""
