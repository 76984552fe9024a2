"""Option pricing under anomalous diffusion: Levy drivers time-changed by SL and DRD clocks."""
from .anomalous import AnomalousModel, char_function, drd_cumulants, model_from_dict, model_from_json
from .levy import CGMY, BrownianMotion, MertonJumpDiffusion, NormalInverseGaussian, VarianceGamma, risk_neutral_compensate
from .pricing import (
    MarketSetup,
    OptionSpec,
    QuadratureConfig,
    call_prices,
    digital_prices,
    implied_vol,
    price_call,
    price_digital,
    price_put,
    skew,
    surface,
)

__version__ = "0.1.0"

__all__ = [
    "AnomalousModel",
    "BrownianMotion",
    "CGMY",
    "MarketSetup",
    "MertonJumpDiffusion",
    "NormalInverseGaussian",
    "OptionSpec",
    "QuadratureConfig",
    "VarianceGamma",
    "call_prices",
    "char_function",
    "digital_prices",
    "drd_cumulants",
    "implied_vol",
    "model_from_dict",
    "model_from_json",
    "price_call",
    "price_digital",
    "price_put",
    "risk_neutral_compensate",
    "skew",
    "surface",
]
