"""Standardization, PCA, HDBSCAN clustering and cluster summaries."""

from .hdbscan import ClusterModel, core_distances, hdbscan_fit, mutual_reachability_mst
from .pca import PCAModel, pca_fit, pca_select, pca_transform, standardize
from .selection import grid_search_hdbscan, silhouette
from .summary import FiveNumber, cluster_summary

__all__ = [
    "ClusterModel", "FiveNumber", "PCAModel", "cluster_summary", "core_distances",
    "grid_search_hdbscan", "hdbscan_fit", "mutual_reachability_mst", "pca_fit",
    "pca_select", "pca_transform", "silhouette", "standardize",
]
