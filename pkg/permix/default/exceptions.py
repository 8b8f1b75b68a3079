#!/usr/bin/env python3


class PermixException(Exception):
    pass


class ConfigError(PermixException):
    pass


class InvalidDistribution(PermixException):
    pass


class DimensionMismatch(PermixException):
    pass


class UnsupportedSupport(PermixException):
    pass


class CapExceeded(PermixException):
    pass


class IllConditioned(PermixException):
    pass


class BoundViolation(PermixException):
    '''A mathematical inequality or identity did not hold'''
    pass
