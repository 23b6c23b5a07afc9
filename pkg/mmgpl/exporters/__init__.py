"""
Exporters Package

Plot-ready data: relevance heat maps, token graphs, concept flows and metric tables.
"""

from .heatmap_exporter import (
    HEATMAP_COLUMNS, HeatmapExporter, read_pgm, to_grey, token_at, voxel_map, weight_range, write_pgm,
)
from .graph_exporter import EDGE_COLUMNS, GraphExporter, concept_columns, edge_table
from .flow_exporter import FLOW_COLUMNS, FlowExporter, concept_flows, concept_labels
from .metrics_exporter import MetricsExporter, predictions_table, report_row

__all__ = [
    "HEATMAP_COLUMNS", "HeatmapExporter", "read_pgm", "to_grey", "token_at", "voxel_map", "weight_range",
    "write_pgm",
    "EDGE_COLUMNS", "GraphExporter", "concept_columns", "edge_table",
    "FLOW_COLUMNS", "FlowExporter", "concept_flows", "concept_labels",
    "MetricsExporter", "predictions_table", "report_row",
]
