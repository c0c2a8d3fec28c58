"""Cox proportional hazards regression when the covariate count grows with
the sample size: MLE existence, the phase boundary, the asymptotic state
equations and bias/variance-corrected inference."""

__version__ = "0.1.0"
