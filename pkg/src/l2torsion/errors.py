"""Exception taxonomy shared across modules.

``ValidationFailure`` marks structurally bad inputs (CLI exit 2);
``NumericPreconditionError`` marks inputs failing a numeric precondition such
as positive semidefiniteness (CLI exit 3).
"""


class ValidationFailure(ValueError):
    pass


class NumericPreconditionError(ValueError):
    pass
