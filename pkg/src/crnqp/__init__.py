"""Large-deviation tools for mass-action chemical reaction networks."""

__version__ = "0.1.0"

from .network import Network, Reaction, load_network, parse_network  # noqa: E402

__all__ = ["Network", "Reaction", "load_network", "parse_network", "__version__"]
