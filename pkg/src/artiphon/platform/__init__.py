"""
Platform layer for Artiphon.

Reusable building blocks shared by the feature modules:
- phonology: articulatory class inventories and the phoneme map
- storage_layer: corpus file formats and checkpoints
- tensor: numpy reverse-mode autodiff and neural-network layers
"""
