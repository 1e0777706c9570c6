"""DerivGuide - saturation proving with clause selection learned from derivation histories."""
