"""Base zone classifiers and their training utilities."""

from .learners import (
    ClassifierKind,
    DecisionTreeParams,
    InstanceBasedParams,
    InstanceStore,
    NeuralNetModel,
    NeuralNetParams,
    TreeModel,
    fit_learner,
    kind_name,
    learner_from_dict,
    params_from_dict,
    params_to_dict,
)
from .training import (
    ConfusionMatrix,
    TrainedClassifier,
    balance_dataset,
    likelihood_rows,
    nested_cv,
    predict,
    train,
)

__all__ = [
    "ClassifierKind",
    "ConfusionMatrix",
    "DecisionTreeParams",
    "InstanceBasedParams",
    "InstanceStore",
    "NeuralNetModel",
    "NeuralNetParams",
    "TrainedClassifier",
    "TreeModel",
    "balance_dataset",
    "fit_learner",
    "kind_name",
    "learner_from_dict",
    "likelihood_rows",
    "nested_cv",
    "params_from_dict",
    "params_to_dict",
    "predict",
    "train",
]
