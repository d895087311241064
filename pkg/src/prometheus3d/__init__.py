"""3D multi-target tracking from three synchronized camera views.

The pipeline reconstructs a (3D + 1) space-time point cloud from per-view
foreground masks, resolves optical occlusions with linear-time connected
components labeling, and resolves real 3D-proximity occlusions with
normalized-cut spectral clustering.
"""

__version__ = "0.1.0"
