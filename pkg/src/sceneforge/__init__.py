"""Synthetic indoor-scene dataset toolkit.

Builds physically settled, convention-scored object layouts from scanned
meshes and compact human priors, renders them with pixel-accurate ground
truth (instance ids, depth, normals), and packages the result for
instance-segmentation training. Loss kernels and architecture checks for
the downstream image-translation stage live here too, so the whole data
path can be verified without a GPU.
"""

from .errors import (ArchParseError, BudgetExhaustedError, MeshError,
                     SceneForgeError, UnknownCategoryError, ValidationError)
from .assets import (ModelLibrary, ObjectModel, SceneBackground,
                     SupportSurface, TriMesh, load_asset_index, load_obj,
                     load_object, load_scene, save_obj)
from .knowledge import (Anchor, Keypose, KnowledgeBase, LocationPrior,
                        PosePrior, ReasoningConfig, RelationshipPrior,
                        knowledge_from_dict, knowledge_to_dict,
                        load_knowledge, save_knowledge)
from .reasoning import (Layout, LikelihoodReport, PairScore, Placement,
                        calibrate_threshold, commonsense_accept,
                        layout_likelihood, pair_location_likelihood,
                        pair_pose_likelihood, pair_relation_likelihood,
                        with_acceptance)
from .physics import (Contact, ContactReport, PhysicsConfig,
                      penetration_check, physics_accept, settle,
                      stability_check)
from .layoutgen import (GenConfig, GenStats, SensitivityReport,
                        annotation_cost, batch_divergence, batch_features,
                        candidate_rng, divergence_floor, generate,
                        jensen_shannon,
                        layout_from_dict, layout_to_dict, sample_candidate,
                        sensitivity_report, simulate_annotators)
from .render import (Camera, CameraProfile, RenderedSample, decode_depth,
                     decode_normal, decode_sample, encode_depth,
                     encode_normal, encode_sample, look_at, rasterize,
                     sample_camera)
from .losses import (LossWeights, finite_diff_check, geo_guided_grads,
                     geo_guided_loss, lsgan_grads, lsgan_losses, pmse_grad,
                     pmse_loss, reconstruction_grads, reconstruction_loss,
                     total_objective)
from .netspec import (COLOR_PATH, DISCRIMINATOR, GEOMETRY_PATH, PREDICTOR,
                      ConvSpec, Layer, parse_arch, receptive_field,
                      shape_trace, spec_to_string)
from .coco import decode_rle, encode_rle, export_coco, import_coco, mask_bbox
from .manifest import (DatasetManifest, category_table, load_manifest,
                       recount_instances, validate_manifest)

__version__ = "1.0.0"

__all__ = [
    "ArchParseError", "BudgetExhaustedError", "MeshError", "SceneForgeError",
    "UnknownCategoryError", "ValidationError",
    "ModelLibrary", "ObjectModel", "SceneBackground", "SupportSurface",
    "TriMesh", "load_asset_index", "load_obj", "load_object", "load_scene",
    "save_obj",
    "Anchor", "Keypose", "KnowledgeBase", "LocationPrior", "PosePrior",
    "ReasoningConfig", "RelationshipPrior", "knowledge_from_dict",
    "knowledge_to_dict", "load_knowledge", "save_knowledge",
    "Layout", "LikelihoodReport", "PairScore", "Placement",
    "calibrate_threshold", "commonsense_accept", "layout_likelihood",
    "pair_location_likelihood", "pair_pose_likelihood",
    "pair_relation_likelihood", "with_acceptance",
    "Contact", "ContactReport", "PhysicsConfig", "penetration_check",
    "physics_accept", "settle", "stability_check",
    "GenConfig", "GenStats", "SensitivityReport", "annotation_cost",
    "batch_divergence", "batch_features", "divergence_floor", "candidate_rng",
    "generate",
    "jensen_shannon", "layout_from_dict", "layout_to_dict",
    "sample_candidate", "sensitivity_report", "simulate_annotators",
    "Camera", "CameraProfile", "RenderedSample", "decode_depth",
    "decode_normal", "decode_sample", "encode_depth", "encode_normal",
    "encode_sample", "look_at", "rasterize", "sample_camera",
    "LossWeights", "finite_diff_check", "geo_guided_grads",
    "geo_guided_loss", "lsgan_grads", "lsgan_losses", "pmse_grad",
    "pmse_loss", "reconstruction_grads", "reconstruction_loss",
    "total_objective",
    "COLOR_PATH", "DISCRIMINATOR", "GEOMETRY_PATH", "PREDICTOR", "ConvSpec",
    "Layer", "parse_arch", "receptive_field", "shape_trace",
    "spec_to_string",
    "decode_rle", "encode_rle", "export_coco", "import_coco", "mask_bbox",
    "DatasetManifest", "category_table", "load_manifest",
    "recount_instances", "validate_manifest",
    "__version__",
]
