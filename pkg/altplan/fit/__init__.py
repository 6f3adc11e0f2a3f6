"""
This folder contains the lifetime-distribution fitting functions:
the Weibull accelerated-failure-time model for right-censored data.
"""
