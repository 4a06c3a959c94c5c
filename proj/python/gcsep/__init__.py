from ._gcsep import (
    ModelConfig,
    SeparatorModel,
    count_model_macs,
    count_model_params,
    generate_toy_mixture,
    pit_si_sdr,
    profile_model,
    si_sdr_db,
    snr_db,
    table2_configs,
)

__all__ = [
    "ModelConfig",
    "SeparatorModel",
    "count_model_macs",
    "count_model_params",
    "generate_toy_mixture",
    "pit_si_sdr",
    "profile_model",
    "si_sdr_db",
    "snr_db",
    "table2_configs",
]
