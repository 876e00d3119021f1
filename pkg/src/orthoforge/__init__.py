"""orthoforge: pseudo-satellite orthophoto rendering from colored point
clouds, shift-invariant wavelet losses, and cosine-similarity retrieval
evaluation."""

from .kernels import BACKEND
from .pointcloud import Aabb, ColoredPointCloud, bounding_box, load_ply, save_ply
from .plane import (
    GroundPlane,
    PlanePointSet,
    build_frame,
    fit_plane_ransac,
    fix_orientation,
    to_plane_coords,
)
from .raster import (
    OrthoFrameBuffer,
    OrthoImage,
    RasterConfig,
    center_crop,
    choose_resolution,
    composite,
    downsample_lanczos,
    rasterize_layers,
    render_orthophoto,
)
from .inpaint import harmonize, inpaint
from .wavelets import (
    LossWeights,
    SwtPyramid,
    mask_loss,
    swt_forward,
    swt_inverse,
    swt_loss,
    uncertainty_total,
)
from .edges import canny_edges
from .retrieval import (
    Descriptor,
    DescriptorSet,
    LatentTensor,
    average_precision,
    cosine_sim,
    evaluate,
    load_descriptor_pack,
    rank_all,
    readout,
    recall_at_k,
    save_descriptor_pack,
)
from .warp import estimate_homography, perspective_fallback

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
