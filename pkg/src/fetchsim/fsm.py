"""Seven-state task machine coordinating perception and motion.

The transition function is pure: given a state and an incoming flag event
it returns the next state (or a terminal outcome) plus the ordered command
block handed to the motion side.  Command payloads that originate in event
data (the detected box) ride along on the command; symbolic targets
("shelf", "request", "place") are resolved by the executor, which owns the
world model.  Any *Failed event aborts the service from its current state -
there are no recovery states.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any


class FsmState(enum.Enum):
    WAIT_REQUEST = "WaitRequest"
    NAVIGATE_TO_SHELF = "NavigateToShelf"
    DETECT_AND_APPROACH = "DetectAndApproach"
    GRASP_OBJECT = "GraspObject"
    NAVIGATE_TO_SERVE = "NavigateToServe"
    RELOCALIZE = "ReLocalize"
    PLACE_OBJECT = "PlaceObject"


class EventType(enum.Enum):
    REQUEST_RECEIVED = "RequestReceived"
    MOTION_DONE = "MotionDone"
    MOTION_FAILED = "MotionFailed"
    DETECTION_SUCCEEDED = "DetectionSucceeded"
    DETECTION_FAILED = "DetectionFailed"
    GRASP_CONFIRMED = "GraspConfirmed"
    GRASP_FAILED = "GraspFailed"
    RELOCALIZE_CONVERGED = "RelocalizeConverged"
    RELOCALIZE_FAILED = "RelocalizeFailed"
    PLACE_CONFIRMED = "PlaceConfirmed"
    PLACE_FAILED = "PlaceFailed"


@dataclass(frozen=True)
class FsmEvent:
    type: EventType
    payload: Any = None


class CommandKind(enum.Enum):
    PLAN_BASE = "PlanBase"
    APPROACH = "Approach"
    PLAN_ARM = "PlanArm"
    OPEN_GRIPPER = "OpenGripper"
    CLOSE_GRIPPER = "CloseGripper"
    REQUEST_DETECTION = "RequestDetection"
    REQUEST_RELOCALIZE = "RequestRelocalize"


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    target: Any = None


@dataclass(frozen=True)
class ServiceDone:
    pass


@dataclass(frozen=True)
class ServiceFailed:
    state: FsmState


Outcome = ServiceDone | ServiceFailed


class IllegalTransitionError(RuntimeError):
    """Event arrived in a state where it is not defined."""

    def __init__(self, state: FsmState, event: EventType):
        super().__init__(f"event {event.value} is illegal in state {state.value}")
        self.state = state
        self.event = event


_FAIL_EVENTS = {
    EventType.MOTION_FAILED,
    EventType.DETECTION_FAILED,
    EventType.GRASP_FAILED,
    EventType.RELOCALIZE_FAILED,
    EventType.PLACE_FAILED,
}

# state -> set of legal events (success transitions listed in _ADVANCE,
# failure events legal wherever the matching activity can be in flight).
LEGAL_EVENTS: dict[FsmState, frozenset[EventType]] = {
    FsmState.WAIT_REQUEST: frozenset({EventType.REQUEST_RECEIVED}),
    FsmState.NAVIGATE_TO_SHELF: frozenset(
        {EventType.MOTION_DONE, EventType.MOTION_FAILED}
    ),
    FsmState.DETECT_AND_APPROACH: frozenset(
        {EventType.DETECTION_SUCCEEDED, EventType.DETECTION_FAILED, EventType.MOTION_FAILED}
    ),
    FsmState.GRASP_OBJECT: frozenset(
        {EventType.GRASP_CONFIRMED, EventType.GRASP_FAILED, EventType.MOTION_FAILED}
    ),
    FsmState.NAVIGATE_TO_SERVE: frozenset(
        {EventType.MOTION_DONE, EventType.MOTION_FAILED}
    ),
    FsmState.RELOCALIZE: frozenset(
        {EventType.RELOCALIZE_CONVERGED, EventType.RELOCALIZE_FAILED}
    ),
    FsmState.PLACE_OBJECT: frozenset(
        {EventType.PLACE_CONFIRMED, EventType.PLACE_FAILED, EventType.MOTION_FAILED}
    ),
}


def _advance(state: FsmState, event: FsmEvent) -> tuple[FsmState | Outcome, list[Command]]:
    if state is FsmState.WAIT_REQUEST:
        return (
            FsmState.NAVIGATE_TO_SHELF,
            [Command(CommandKind.PLAN_BASE, target=("shelf", event.payload))],
        )
    if state is FsmState.NAVIGATE_TO_SHELF:
        return (
            FsmState.DETECT_AND_APPROACH,
            [
                Command(CommandKind.APPROACH, target="request"),
                Command(CommandKind.REQUEST_DETECTION, target="request"),
            ],
        )
    if state is FsmState.DETECT_AND_APPROACH:
        return (
            FsmState.GRASP_OBJECT,
            [
                Command(CommandKind.PLAN_ARM, target=event.payload),
                Command(CommandKind.CLOSE_GRIPPER),
            ],
        )
    if state is FsmState.GRASP_OBJECT:
        return (
            FsmState.NAVIGATE_TO_SERVE,
            [Command(CommandKind.PLAN_BASE, target=("serve", None))],
        )
    if state is FsmState.NAVIGATE_TO_SERVE:
        return (FsmState.RELOCALIZE, [Command(CommandKind.REQUEST_RELOCALIZE)])
    if state is FsmState.RELOCALIZE:
        return (
            FsmState.PLACE_OBJECT,
            [
                Command(CommandKind.PLAN_ARM, target="place"),
                Command(CommandKind.OPEN_GRIPPER),
            ],
        )
    return (ServiceDone(), [])


def step_fsm(state: FsmState, event: FsmEvent) -> tuple[FsmState | Outcome, list[Command]]:
    """Pure transition: (state, event) -> (next state or outcome, commands).

    Raises IllegalTransitionError for undefined pairs; that is a programming
    error in the caller, not a service failure.
    """
    if not isinstance(state, FsmState):
        raise TypeError(f"not a state: {state!r}")
    if event.type not in LEGAL_EVENTS[state]:
        raise IllegalTransitionError(state, event.type)
    if event.type in _FAIL_EVENTS:
        return ServiceFailed(state), []
    return _advance(state, event)


NOMINAL_SEQUENCE = (
    FsmState.WAIT_REQUEST,
    FsmState.NAVIGATE_TO_SHELF,
    FsmState.DETECT_AND_APPROACH,
    FsmState.GRASP_OBJECT,
    FsmState.NAVIGATE_TO_SERVE,
    FsmState.RELOCALIZE,
    FsmState.PLACE_OBJECT,
)
