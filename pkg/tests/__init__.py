"""
Test suite for esrom
"""
