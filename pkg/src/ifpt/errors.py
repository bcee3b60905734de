"""Exception types raised by the solver, simulators and calibration code."""


class IfptError(Exception):
    """Base class for all errors raised by :mod:`ifpt`."""

    #: short machine-readable tag used by the command line front-end
    code = "error"

    def payload(self):
        return {"error": self.code, "message": str(self)}


class InvalidParameterError(IfptError, ValueError):
    code = "invalid-parameter"


class IncompatibleGridError(IfptError, ValueError):
    code = "incompatible-grid"


class HazardBoundError(IfptError, ValueError):
    """The target survival law violates ``0 < -g(t) < lam * G(t)``."""

    code = "hazard-bound-violation"

    def __init__(self, message, worst_margin=None, argmin_t=None):
        super().__init__(message)
        self.worst_margin = worst_margin
        self.argmin_t = argmin_t

    def payload(self):
        out = super().payload()
        out.update(worst_margin=self.worst_margin, argmin_t=self.argmin_t)
        return out


class NumericalError(IfptError):
    """Failure of a numerical procedure on otherwise valid input."""

    code = "numerical-error"


class NoRootError(NumericalError):
    code = "no-root"


class BarrierDegeneracyError(NumericalError):
    """The denominator ``lam * <psi_x(. - b), u>`` of the barrier ODE vanished."""

    code = "barrier-degeneracy"

    def __init__(self, t, value, floor):
        super().__init__(
            f"barrier ODE denominator {value:.3e} below floor {floor:.3e} at t={t:.6g}")
        self.t = t
        self.value = value
        self.floor = floor

    def payload(self):
        out = super().payload()
        out.update(t=self.t, value=self.value, floor=self.floor)
        return out


class MassLeakError(NumericalError):
    code = "mass-leak"

    def __init__(self, t, boundary_mass, tol):
        super().__init__(
            f"boundary mass {boundary_mass:.3e} exceeds tolerance {tol:.3e} at t={t:.6g}")
        self.t = t
        self.boundary_mass = boundary_mass
        self.tol = tol

    def payload(self):
        out = super().payload()
        out.update(t=self.t, boundary_mass=self.boundary_mass, tol=self.tol)
        return out


class UnbootstrappableQuoteError(NumericalError):
    code = "unbootstrappable-quote"

    def __init__(self, segment, message):
        super().__init__(f"segment {segment}: {message}")
        self.segment = segment

    def payload(self):
        out = super().payload()
        out["segment"] = self.segment
        return out


class SegmentError(NumericalError):
    """A solver error raised while integrating one segment of a stitched run."""

    def __init__(self, segment, cause):
        super().__init__(f"segment {segment}: {cause}")
        self.segment = segment
        self.cause = cause
        self.code = getattr(cause, "code", "numerical-error")

    def payload(self):
        out = self.cause.payload() if isinstance(self.cause, IfptError) else {}
        out.update(error=self.code, message=str(self), segment=self.segment)
        return out
