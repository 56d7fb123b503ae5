"""Streamlit helpers shared by the dashboard pages."""
