"""Exception hierarchy shared by all modules."""


class BundleBidError(Exception):
    """Base class for every error raised by this package."""


class DemandExceedsCapacity(BundleBidError):
    pass


class TooManyRequests(BundleBidError):
    pass


class ParseError(BundleBidError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonIntegerDemand(ParseError):
    pass


class SchemaError(BundleBidError):
    pass


class SetTooLarge(BundleBidError):
    def __init__(self, size, limit):
        self.size = size
        self.limit = limit
        super().__init__(f"request set of size {size} exceeds limit {limit}")


class RootNotElementary(BundleBidError):
    pass


class NoPartitionExists(BundleBidError):
    pass


class CapacityViolated(BundleBidError):
    pass


class NoFeasiblePair(BundleBidError):
    pass


class Infeasible(BundleBidError):
    pass


class Uncoverable(BundleBidError):
    def __init__(self, requests):
        self.requests = tuple(requests)
        super().__init__(f"no bid covers request(s) {list(self.requests)}")


class TooManyBids(BundleBidError):
    pass
