"""
Exception root for the handset antenna simulator.

Each module defines its own exception types next to the code that raises
them; they all derive from HandsetAntennaError so callers (the CLI in
particular) can map families of failures to exit codes.
"""


class HandsetAntennaError(Exception):
    """Base class for all errors raised by handset_antenna_sim"""
    pass


class ContractViolation(HandsetAntennaError):
    """A numeric contract (orthonormality, power conservation, ...) was broken"""
    pass


class InvalidArgument(HandsetAntennaError, ValueError):
    """An operation argument (grid step, angle, sample count) is outside its domain"""
    pass
