"""
Features: corpus generation, frame alignment, encoders, models, training
and evaluation.
"""
