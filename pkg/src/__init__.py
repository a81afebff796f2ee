# SBAS Lab - secure backbone hijack simulator and PoP control plane model
# BGP attack simulations plus the SBAS ingress, redistribution and routing logic

__version__ = "0.1.0"
__author__ = "SBAS Lab Team"
