"""
Test Suite for Trustworthy RAG System
"""

