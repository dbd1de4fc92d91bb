"""Virtual prismatic joint kinematics for a 6R robot and box-placement optimization.

The virtual joint ``v`` sits between joints 3 and 4 and stretches the forearm,
so every frame has a backward transform; ``|v|`` is then the distance of the
wrist centre point to the reachable hollow sphere and serves as a smooth
measure of infeasibility for placement problems.
"""
from .geometry import (
    IDENTITY,
    EulerPose,
    Frame,
    GimbalLock,
    compose,
    dh_transform,
    euler_to_frame,
    frame_to_euler,
    inverse,
    rot_x,
    rot_y,
    rot_z,
    translate,
)
from .ik import BranchSingular, IkSolution, OutOfReach, ik_all, ik_original, wcp_target_from_tcp
from .placement import BoxSpec, PlacementProblem, PlacementVariables, grid_frames
from .robot import (
    DhRow,
    JointKind,
    RobotModel,
    Singular,
    WorkspaceShell,
    check_limits,
    configuration_of,
    fk_tcp,
    fk_virtual_tcp,
    fk_virtual_wcp,
    fk_wcp,
    load_model,
)
from .solver import NlpProblem, SolveReport, SolverOptions, Status, minimize, stationarity_measure
from .virtual import (
    TOOL_DOWN,
    QuinticPatch,
    SmoothingParams,
    VirtualJoints,
    boundary_crossing,
    distance_to_shell,
    ik_virtual,
    ik_virtual_tcp,
    smooth_elbow_angle,
    sweep_line,
)

__all__ = [
    "IDENTITY",
    "TOOL_DOWN",
    "BoxSpec",
    "BranchSingular",
    "DhRow",
    "EulerPose",
    "Frame",
    "GimbalLock",
    "IkSolution",
    "JointKind",
    "NlpProblem",
    "OutOfReach",
    "PlacementProblem",
    "PlacementVariables",
    "QuinticPatch",
    "RobotModel",
    "Singular",
    "SmoothingParams",
    "SolveReport",
    "SolverOptions",
    "Status",
    "VirtualJoints",
    "WorkspaceShell",
    "boundary_crossing",
    "check_limits",
    "compose",
    "configuration_of",
    "dh_transform",
    "distance_to_shell",
    "euler_to_frame",
    "fk_tcp",
    "fk_virtual_tcp",
    "fk_virtual_wcp",
    "fk_wcp",
    "frame_to_euler",
    "grid_frames",
    "ik_all",
    "ik_original",
    "ik_virtual",
    "ik_virtual_tcp",
    "wcp_target_from_tcp",
    "inverse",
    "load_model",
    "minimize",
    "rot_x",
    "rot_y",
    "rot_z",
    "smooth_elbow_angle",
    "stationarity_measure",
    "sweep_line",
    "translate",
]
