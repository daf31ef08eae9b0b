import abc


class InvalidValueException(Exception):
    pass


class Decorator(abc.ABC):
    """Tags a test function with a value that run_tests.py can filter on."""

    def __init__(self, v) -> None:
        res = self.validate(v)
        if res:
            raise InvalidValueException(res)
        self.v = v

    def validate(self, v):
        return None

    def __call__(self, func):
        setattr(func, self.get_attr_name(), self.v)
        return func

    @classmethod
    def get_attr_name(cls):
        return f"__{cls.__name__}__"

    @classmethod
    def read(cls, func, default=None):
        return getattr(func, cls.get_attr_name(), default)


class number(Decorator):
    """Task number of the test, e.g. @number("3.2") for the oracle tests."""

    def validate(self, v):
        if not isinstance(v, str) or not v:
            return "Number should be a non-empty string like '1.4'."


class slow(Decorator):
    """
    Acceptance-scale test (large Monte Carlo runs, full sweeps).
    Skipped unless run_tests.py gets --slow.

    Usage: @slow()
    """

    def __init__(self) -> None:
        self.v = True
