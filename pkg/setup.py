#!/usr/bin/env python3
"""
QKD-Sec Setup Script
"""
import os
import subprocess
import sys


def run_command(command, description):
    """Run a command and handle errors"""
    print(f"🔄 {description}...")
    try:
        subprocess.run(command, shell=True, check=True, capture_output=True, text=True)
        print(f"✅ {description} completed successfully")
        return True
    except subprocess.CalledProcessError as e:
        print(f"❌ {description} failed: {e.stderr}")
        return False


def main():
    """Main setup function"""
    print("🚀 Setting up QKD-Sec...")

    # Check Python version
    if sys.version_info < (3, 9):
        print("❌ Python 3.9+ is required")
        sys.exit(1)

    print(f"✅ Python {sys.version.split()[0]} detected")

    # Install dependencies
    if not run_command(f"{sys.executable} -m pip install -r requirements.txt", "Installing dependencies"):
        print("❌ Failed to install dependencies")
        sys.exit(1)

    # Check if .env exists
    if not os.path.exists(".env"):
        print("⚠️  .env file not found. Defaults apply; copy env_template.txt to .env to change them.")
        print("   cp env_template.txt .env")
    else:
        print("✅ .env file found")

    # Smoke check of the exhaustive hashing suite
    if not run_command(f"{sys.executable} -m qkdsec verify --suite hashing --trials 0", "Checking installation"):
        print("⚠️  Hashing suite did not pass; run it manually to see the report")

    print("\n🎉 Setup completed!")
    print("\nNext steps:")
    print("1. Run the tests: pytest")
    print("2. Compute a rate: python -m qkdsec rate --protocol bb84 --qber 0.05")
    print("3. Simulate a run: python -m qkdsec --seed 7 simulate --protocol bb84 --lambdas 1,0,0,0 --n 256")
    print("\nSee docs/QUICKSTART.md for the full command reference")


if __name__ == "__main__":
    if len(sys.argv) > 1:
        # Invoked by a build backend (pip install): package metadata lives in pyproject.toml
        from setuptools import setup

        setup()
    else:
        main()
