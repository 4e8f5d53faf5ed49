# embedtrack tests
