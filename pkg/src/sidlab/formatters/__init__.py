"""Result file formats for sidlab."""

from sidlab.formatters.records import (
    Record,
    TrajectoryLog,
    read_campaign,
    read_manifest,
    read_measure,
    read_plot_data,
    read_trajectory,
    sniff_kind,
    write_campaign,
    write_manifest,
    write_measure,
    write_plot_data,
)

__all__ = [
    "Record",
    "TrajectoryLog",
    "read_campaign",
    "read_manifest",
    "read_measure",
    "read_plot_data",
    "read_trajectory",
    "sniff_kind",
    "write_campaign",
    "write_manifest",
    "write_measure",
    "write_plot_data",
]
