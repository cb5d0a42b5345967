"""Exception hierarchy shared by every module."""


class PolythreadError(Exception):
    pass


class TermError(PolythreadError, ValueError):
    """Malformed term, recursive specification, or input text."""


class StateOverflow(PolythreadError):
    """State-space exploration exceeded its limit."""


class ExecutionError(PolythreadError):
    """A simulation could not proceed."""


class UnresolvedChoice(ExecutionError):
    def __init__(self, msg="unresolved external choice"):
        super().__init__(msg)


class UnservedFocus(ExecutionError):
    def __init__(self, focus):
        super().__init__(f"unserved focus: {focus}")
        self.focus = focus


class SwitchOutsideContext(ExecutionError):
    def __init__(self, msg="switch-over outside poly-threading context"):
        super().__init__(msg)
