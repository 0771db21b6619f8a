"""Conservation laws of an extended rotating charge coupled to Maxwell fields.

Modules: :mod:`.so3` (rotation algebra), :mod:`.poincare` (frame-velocity
equations and invariants), :mod:`.rigid_body`, :mod:`.grid` (periodic
spectral fields), :mod:`.external`, :mod:`.coupled`, :mod:`.config`,
:mod:`.runner` and :mod:`.cli`.
"""

__version__ = "0.1.0"
