"""
Services package for the simulation pipelines.
"""
