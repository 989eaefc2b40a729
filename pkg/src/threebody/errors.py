"""Exception hierarchy shared by all modules."""


class ScatteringError(Exception):
    """Base class; ``module`` names the component that raised."""

    module = "threebody"

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


class InvalidSpec(ScatteringError, ValueError):
    module = "pair_model"


class NoBoundState(ScatteringError):
    module = "pair_model"


class ClosedChannel(ScatteringError, ValueError):
    module = "pair_model"


class InvalidTol(ScatteringError, ValueError):
    module = "pair_model"


class InvalidConfig(ScatteringError, ValueError):
    module = "config"


class MeshGenerationFailure(ScatteringError):
    module = "helmholtz_core"


class MeshMismatch(ScatteringError, ValueError):
    module = "helmholtz_core"


class AssemblyFailure(ScatteringError):
    module = "helmholtz_core"


class SingularSystem(ScatteringError):
    module = "helmholtz_core"


class DenominatorNearZero(ScatteringError):
    module = "lowrank_solver"


class RankSystemSingular(ScatteringError):
    module = "lowrank_solver"
