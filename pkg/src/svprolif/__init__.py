"""Support vector proliferation: hard-margin SVM, ridgeless regression and
Monte-Carlo sweeps over random feature ensembles."""

__version__ = "0.1.0"
