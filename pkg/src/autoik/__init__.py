"""Automatic analytical inverse kinematics for revolute-joint chains.

The package remodels a kinematic chain, assigns it to a solvable kinematic
class by exploiting parallel and intersecting joint axes, and decomposes its
inverse kinematics into closed-form geometric subproblems. One cheap
derivation per robot yields a reusable plan; each solve returns the complete
solution set.
"""

from .chain import JointAxis, KinematicChain, fk, invert_chain, lock_joint
from .geom import Pose, normalize_angle, rodrigues
from .remodel import (
    ClassTag,
    DecompositionPlan,
    KinematicClass,
    classify,
    detect_relations,
    remodel_chain,
)
from .robot_io import parse_native, parse_urdf, serialize_chain, serialize_solutions
from .solver import IKSolution, IKSolutionSet, IKTarget, Tolerances, solve

__version__ = "0.1.0"

__all__ = [
    "ClassTag",
    "DecompositionPlan",
    "IKSolution",
    "IKSolutionSet",
    "IKTarget",
    "JointAxis",
    "KinematicChain",
    "KinematicClass",
    "Pose",
    "Tolerances",
    "classify",
    "detect_relations",
    "fk",
    "invert_chain",
    "lock_joint",
    "normalize_angle",
    "parse_native",
    "parse_urdf",
    "remodel_chain",
    "rodrigues",
    "serialize_chain",
    "serialize_solutions",
    "solve",
    "__version__",
]
