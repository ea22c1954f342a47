"""
例外類模組
"""


class QlaError(Exception):
    """模擬器所有例外的基底類"""


class ConfigError(QlaError, ValueError):
    """參數設定錯誤：缺少鍵值、範圍錯誤或未知的參數檔"""


class ModelError(QlaError):
    """模型無法給出結果，例如保真度無法達成或端點不連通"""


class CircuitError(QlaError, ValueError):
    """電路描述錯誤：未知閘、重複目標或量子位元越界"""
