"""Entanglement concentration and purification with cavity-field ancillas."""
