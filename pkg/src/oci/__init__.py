"""Object-centric instruction augmentation, feature reuse and a grid-world
behavior-cloning workbench, built on numpy."""
from .geometry import BBox, Direction, Scene, SceneObject, SectorConfig, classify_direction
from .augmenter import RenderConfig, TaskSpec, augment, parse_augmented, render_bbox
from .frm import FrmConfig, frm_forward
from .trainer import TrainConfig, evaluate, gen_dataset, run_ablation_grid, train_bc

__version__ = "0.1.0"
