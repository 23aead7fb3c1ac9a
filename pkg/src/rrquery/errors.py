"""Exception hierarchy shared by every module."""


class RoundRobinError(Exception):
    """Base class for all library errors."""


class ValidationError(RoundRobinError, ValueError):
    """A parameter or input object violates its contract."""


class InvalidInstance(ValidationError):
    pass


class DuplicateUtility(InvalidInstance):
    def __init__(self, agent: int, value):
        self.agent = agent
        self.value = value
        super().__init__(f"agent {agent} assigns utility {value} to more than one item")


class TooFewAgents(InvalidInstance):
    pass


class FewerItemsThanAgents(InvalidInstance):
    pass


class SameItemCompared(ValidationError):
    pass


class OutOfRange(ValidationError, IndexError):
    pass


class BadRank(ValidationError):
    pass


class EmptySet(ValidationError):
    pass


class BadNoiseLevel(ValidationError):
    pass


class BadFailureBudget(ValidationError):
    pass


class OddItemCount(ValidationError):
    pass


class MalformedAllocation(ValidationError):
    pass


class UnknownAllocator(ValidationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown allocator"


class MissingNoiseConfig(ValidationError):
    pass


class AdversaryNotApplicable(ValidationError):
    """The chosen adversary is undefined on the given instance."""


class DeclaredUtilityTie(RoundRobinError):
    def __init__(self, agent: int, value):
        self.agent = agent
        self.value = value
        super().__init__(f"agent {agent}: declared utility {value} appears on several items")
