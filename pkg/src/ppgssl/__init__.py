"""Self-supervised PPG representation learning.

Preprocess raw wrist PPG, pretrain a convolutional autoencoder on signal
reconstruction, extract frozen-encoder features, and evaluate them with
leave-one-subject-out activity recognition and a subject-identification probe
against fully supervised baselines.
"""

__version__ = "0.1.0"
