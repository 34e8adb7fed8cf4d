"""Exception types shared across the workbench."""


class DoorTeleopError(Exception):
    """Base class for all workbench errors."""

    code = "error"


class FrameTagError(DoorTeleopError):
    """A point was supplied in the wrong coordinate frame."""

    code = "frame_tag"


class CollinearPointsError(DoorTeleopError):
    """The three picked points do not span a plane."""

    code = "collinear_points"


class DegenerateNormalError(DoorTeleopError):
    """Plane normal has no horizontal component (horizontal plane)."""

    code = "degenerate_normal"


class SceneParseError(DoorTeleopError):
    """Scene document is not valid JSON or is structurally malformed."""

    code = "scene_parse"


class SceneValidationError(DoorTeleopError):
    """Scene document parsed but violates a descriptor invariant."""

    code = "scene_validation"


class HolePickError(DoorTeleopError):
    """Selected pixel has zero depth (specular hole / out of range)."""

    code = "hole_pick"


class WrongStateError(DoorTeleopError):
    """Action is not legal in the current session state."""

    code = "wrong_state"


class NoStandoffError(DoorTeleopError):
    """Approach requested before any standoff was measured."""

    code = "no_standoff"


class InvalidParametersError(DoorTeleopError):
    """Extracted parameter set violates its invariants."""

    code = "invalid_parameters"


class DecodeError(DoorTeleopError):
    """Wire frame payload could not be decoded into a message."""

    code = "decode"


class FrameTooLargeError(DecodeError):
    """Wire frame length prefix exceeds the 1 MiB cap."""

    code = "frame_too_large"


class TransportError(DoorTeleopError):
    code = "transport"


class TransportTimeout(TransportError):
    """Peer did not answer within the timeout."""

    code = "transport_timeout"


class TransportClosed(TransportError):
    """Connection closed or reset while talking to the peer."""

    code = "transport_closed"
