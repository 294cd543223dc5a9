"""Exception hierarchy.

Every error carries the name of the module that raised it so the CLI can
report provenance alongside the offending flag or file.
"""


class ModalkitError(Exception):
    """Base class for all modalkit errors."""

    module = "modalkit"
    exit_code = 65

    def __init__(self, *args, module=None):
        super().__init__(*args)
        if module is not None:
            self.module = module


class ConfigError(ModalkitError, ValueError):
    module = "cli"
    exit_code = 64


class IoError(ModalkitError, OSError):
    module = "cli"
    exit_code = 74


# snapshots
class IrregularSampling(ModalkitError):
    module = "snapshots"


class MalformedData(ModalkitError, ValueError):
    module = "snapshots"


class SchemaMismatch(ModalkitError, KeyError):
    module = "snapshots"
    exit_code = 64

    def __str__(self):
        # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class InvalidStacking(ModalkitError, ValueError):
    module = "snapshots"
    exit_code = 64


class EmptyRole(ModalkitError, ValueError):
    module = "snapshots"
    exit_code = 64


class TooFewSnapshots(ModalkitError, ValueError):
    module = "snapshots"


# numerics
class DegenerateMatrix(ModalkitError, ValueError):
    module = "numerics"


class RankTooLarge(ModalkitError, ValueError):
    module = "numerics"
    exit_code = 64


class NumericalFailure(ModalkitError, ArithmeticError):
    module = "numerics"
    exit_code = 70


class ShapeError(ModalkitError, ValueError):
    module = "dmd"


# dmdc
class MissingInputs(ModalkitError, ValueError):
    module = "dmdc"
    exit_code = 64


class RankOrderViolation(ModalkitError, ValueError):
    module = "dmdc"
    exit_code = 64


# stability
class DegenerateEigenvalue(ModalkitError, ValueError):
    module = "stability"


# simulator
class SimulationDiverged(ModalkitError, ArithmeticError):
    module = "simulator"
    exit_code = 70


class AliasedMode(ModalkitError, ValueError):
    module = "simulator"
    exit_code = 64


class DegenerateData(ModalkitError, ValueError):
    module = "simulator"
