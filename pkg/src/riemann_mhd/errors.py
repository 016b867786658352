"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class RiemannMHDError(Exception):
    exit_code = 1


class InputError(RiemannMHDError, ValueError):
    exit_code = 2


class ProfileError(InputError):
    pass


class ConstructionError(RiemannMHDError):
    exit_code = 3


class DegenerateWaveError(ConstructionError):
    pass


class PhaseError(RiemannMHDError):
    exit_code = 4


class GradientCatastrophe(PhaseError):
    pass


class NoConvergence(PhaseError):
    pass


class SamplingError(RiemannMHDError):
    exit_code = 4


class VerificationFailure(RiemannMHDError):
    exit_code = 5
