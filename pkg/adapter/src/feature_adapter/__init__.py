"""Feature-map adapter: runs a pretrained vision backbone over an image tree
and writes one CFM1 feature file per image for the partwise pipeline."""

from .cfm import write_cfm
from .dump import AdapterConfig, dump_features, extract_feature_map

__all__ = ["AdapterConfig", "dump_features", "extract_feature_map", "write_cfm"]
