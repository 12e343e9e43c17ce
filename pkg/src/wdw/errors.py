"""Exception hierarchy shared by every module."""


class WdwError(Exception):
    pass


class UnknownClass(WdwError):
    pass


class UnknownProperty(WdwError):
    pass


class UnknownMethodMeta(WdwError):
    pass


class TypeMismatch(WdwError):
    pass


class NameCollision(WdwError):
    pass


class NonCollectionPath(WdwError):
    pass


class NonNumericAgg(WdwError):
    pass


class NotACollection(WdwError):
    pass


class StructureMismatch(WdwError):
    pass


class EmptyStructure(WdwError):
    pass


class EmptyInput(WdwError):
    pass


class DependencyCycle(WdwError):
    pass


class NonMonotonicTick(WdwError):
    pass


class ScheduleViolation(WdwError):
    pass


class SchemaMismatch(WdwError):
    pass


class DanglingRef(WdwError):
    pass


class InverseMismatch(WdwError):
    pass


class DslError(WdwError):
    """Parse-time failure carrying a source position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message)


class DslSyntaxError(DslError):
    pass


class UnresolvedName(DslError):
    pass


class DuplicateDeclaration(DslError):
    pass


class IoError(WdwError):
    pass
